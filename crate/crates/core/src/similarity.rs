//! The two-stage similarity pipeline.
//!
//! Stage one picks the smallest merge radius `m` at which the weighted
//! off-diagonal part of the potential is a strict contraction and conjugates
//! `L0 - V` by `I + G_m V`, leaving a Hilbert-Schmidt perturbation `Vt`.
//! Stage two measures the row/column tail decay of `Vt`, certifies the
//! contraction condition for the quadratic fixed-point map, iterates it to
//! the fixed point `X*`, and assembles the composed transform
//! `U = (I + G_m V)(I + G_k X*)`. The block diagonal of `X*` is the
//! block-diagonal potential the original operator is similar to.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::blockspace::{BlockMatrix, TruncationWindow};
use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg::CMatrix;
use crate::potential::PotentialSpec;
use crate::transforms::{diagonal_part, solve_commutator};
use crate::C64;

/// Relative flooring for the decay weights: weights below
/// `ALPHA_FLOOR * alpha_0` are raised to that floor before any `1/alpha`
/// reweighting. A finitely supported operator would otherwise divide by
/// zero at the edge of its support.
const ALPHA_FLOOR: f64 = 1e-8;

/// Tail-decay weights of an operator: `alpha[n]` measures the mass of rows
/// and columns with mode index `>= n`, normalized so `alpha[0] = 1`.
/// `slope` is the largest difference quotient between weights inside and
/// outside the cut, and `gamma_bound[n] = (omega/2pi)(2 alpha[n] + slope[n])`
/// bounds the weighted-transform norm on products against this operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayWeights {
    window: TruncationWindow,
    alpha: Vec<f64>,       // index 0..=N
    slope: Vec<f64>,       // index 1..=N (entry 0 unused)
    gamma_bound: Vec<f64>, // index 1..=N (entry 0 unused)
}

impl DecayWeights {
    /// Weights of a nonzero operator. Rows and columns are measured with
    /// the blockwise HS norm over the window.
    pub fn of(x: &BlockMatrix) -> Result<Self> {
        if x.is_zero() {
            return Err(Error::ZeroOperator(
                "decay weights need a nonzero operator".into(),
            ));
        }
        let w = *x.window();
        let n = w.half_width();
        let (rows, cols) = x.row_col_norms_sq();
        let total: f64 = rows.iter().sum();
        let norm_sqrt = fmath::sqrt(fmath::sqrt(total)); // |X|^(1/2)
        let mut alpha = Vec::with_capacity((n + 1) as usize);
        for cut in 0..=n {
            let mut row_tail = 0.0;
            let mut col_tail = 0.0;
            for l in -n..=n {
                if l.abs() >= cut {
                    row_tail += rows[(l + n) as usize];
                    col_tail += cols[(l + n) as usize];
                }
            }
            let val = fmath::sqrt(fmath::sqrt(row_tail.max(col_tail))) / norm_sqrt;
            alpha.push(val);
        }
        let floor = ALPHA_FLOOR * alpha[0];
        for a in alpha.iter_mut() {
            if *a < floor {
                *a = floor;
            }
        }
        let at = |i: i32| alpha[i.unsigned_abs() as usize];
        let mut slope = Vec::with_capacity((n + 1) as usize);
        slope.push(0.0);
        for cut in 1..=n {
            let mut best = 0.0_f64;
            for i in -n..=n {
                if i.abs() < cut {
                    continue;
                }
                for j in -n..=n {
                    if j.abs() >= cut {
                        continue;
                    }
                    let q = fmath::abs(at(i) - at(j)) / ((i - j).abs() as f64);
                    if q > best {
                        best = q;
                    }
                }
            }
            slope.push(best);
        }
        let scale = w.omega() / (2.0 * core::f64::consts::PI);
        let mut gamma_bound = Vec::with_capacity((n + 1) as usize);
        gamma_bound.push(0.0);
        for cut in 1..=n as usize {
            gamma_bound.push(scale * (2.0 * alpha[cut] + slope[cut]));
        }
        Ok(Self {
            window: w,
            alpha,
            slope,
            gamma_bound,
        })
    }

    #[inline]
    pub fn alpha(&self, n: i32) -> f64 {
        self.alpha[n.unsigned_abs() as usize]
    }

    #[inline]
    pub fn slope(&self, n: i32) -> f64 {
        self.slope[n.unsigned_abs() as usize]
    }

    /// The contraction bound sequence; defined for `1 <= n <= N`.
    #[inline]
    pub fn gamma_bound(&self, n: i32) -> f64 {
        self.gamma_bound[n.unsigned_abs() as usize]
    }

    /// `max_{|j| > n} alpha_j`, i.e. `alpha_{n+1}` by monotonicity; zero
    /// once the tail leaves the window.
    pub fn tail_max(&self, n: i32) -> f64 {
        if n >= self.window.half_width() {
            0.0
        } else {
            self.alpha(n + 1)
        }
    }
}

/// Reweighted norm: the larger of the HS norms of `X` with columns,
/// respectively rows, scaled by `1/alpha`.
pub fn weighted_norm(x: &BlockMatrix, weights: &DecayWeights) -> f64 {
    let left = x.map_blocks(|_, l, b| Some(b.scale(C64::new(1.0 / weights.alpha(l), 0.0))));
    let right = x.map_blocks(|j, _, b| Some(b.scale(C64::new(1.0 / weights.alpha(j), 0.0))));
    left.hs_norm_fine().max(right.hs_norm_fine())
}

/// Smallest merge radius `m` in `[0, N-1]` with `|G_m V| <= theta`.
///
/// `m = N` would merge the entire window and make stage one vacuous, so it
/// is not admissible; a potential that needs it is too large for the window.
pub fn select_first_radius(v: &BlockMatrix, theta: f64) -> Result<i32> {
    let n = v.window().half_width();
    let mut last = f64::INFINITY;
    for m in 0..n {
        last = solve_commutator(v, m).hs_norm_fine();
        if last <= theta {
            return Ok(m);
        }
    }
    Err(Error::NoAdmissibleM {
        theta,
        max_tried: n - 1,
        norm_at_max: last,
    })
}

/// Stage one: conjugates `Lambda - V` by `I + G_m V`, returning the
/// transformed potential `Vt = J_m V + (I + G_m V)^{-1} (V G_m V - (G_m V)(J_m V))`
/// and the factor `I + G_m V`.
pub fn preliminary_similarity(
    v: &BlockMatrix,
    m: i32,
) -> Result<(BlockMatrix, BlockMatrix)> {
    let gv = solve_commutator(v, m);
    let gv_norm = gv.hs_norm_fine();
    if gv_norm >= 1.0 {
        return Err(Error::NoAdmissibleM {
            theta: 1.0,
            max_tried: m,
            norm_at_max: gv_norm,
        });
    }
    let jv = diagonal_part(v, m);
    let inv = gv.invert_i_plus()?; // (I + G_m V)^{-1} - I
    let core = v.mul(&gv)?.sub(&gv.mul(&jv)?)?;
    let corrected = core.add(&inv.mul(&core)?)?;
    let v_tilde = jv.add(&corrected)?;
    let factor = BlockMatrix::identity(*v.window()).add(&gv)?;
    Ok((v_tilde, factor))
}

/// Smallest `k` in `[m, N-1]` whose contraction certificate
/// `4 gamma_bound(k+1) |Vt|_M` drops below one.
pub fn select_second_radius(
    v_tilde: &BlockMatrix,
    weights: &DecayWeights,
    m: i32,
) -> Result<i32> {
    let n = v_tilde.window().half_width();
    let mnorm = weighted_norm(v_tilde, weights);
    let mut last = f64::INFINITY;
    for k in m..n {
        last = 4.0 * weights.gamma_bound(k + 1) * mnorm;
        if last < 1.0 {
            return Ok(k);
        }
    }
    Err(Error::NoAdmissibleK {
        max_tried: n - 1,
        certificate: last,
    })
}

/// The quadratic map whose fixed point block-diagonalizes `Lambda - B`:
/// `Phi(X) = B G X - (G X)(J B) - (G X) J(B G X) + B` with the transforms
/// taken at radius `k`.
pub fn fixed_point_map(x: &BlockMatrix, b: &BlockMatrix, k: i32) -> Result<BlockMatrix> {
    let gx = solve_commutator(x, k);
    let jb = diagonal_part(b, k);
    let bgx = b.mul(&gx)?;
    let out = bgx
        .sub(&gx.mul(&jb)?)?
        .sub(&gx.mul(&diagonal_part(&bgx, k))?)?
        .add(b)?;
    Ok(out)
}

/// Iteration record of the fixed-point stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointLog {
    /// `|X_{i+1} - X_i|` per iteration; the last entry is at most the
    /// tolerance.
    pub residuals: Vec<f64>,
    /// Radius `3 |B|` of the certified ball.
    pub ball_radius: f64,
    /// Largest observed distance `|X_i - B|`.
    pub max_ball_distance: f64,
}

/// Simple iteration `X_0 = 0, X_{i+1} = Phi(X_i)` run until the step size
/// drops below `tol`. Iterates are required to stay in the certified ball
/// `|X - B| <= 3 |B|`; leaving it flags a violated contraction certificate.
pub fn solve_fixed_point(
    b: &BlockMatrix,
    k: i32,
    tol: f64,
    max_iter: usize,
) -> Result<(BlockMatrix, FixedPointLog)> {
    let b_norm = b.hs_norm_fine();
    let ball_radius = 3.0 * b_norm;
    let mut log = FixedPointLog {
        residuals: Vec::new(),
        ball_radius,
        max_ball_distance: 0.0,
    };
    let mut x = BlockMatrix::new(*b.window());
    for iteration in 0..max_iter {
        let next = fixed_point_map(&x, b, k)?;
        let residual = next.sub(&x)?.hs_norm_fine();
        log.residuals.push(residual);
        x = next;
        let distance = x.sub(b)?.hs_norm_fine();
        if distance > log.max_ball_distance {
            log.max_ball_distance = distance;
        }
        if distance > ball_radius * (1.0 + 1e-12) {
            return Err(Error::BallEscape {
                iteration,
                distance,
                radius: ball_radius,
            });
        }
        if residual <= tol {
            return Ok((x, log));
        }
    }
    Err(Error::MaxIterExceeded {
        iterations: max_iter,
        last_residual: log.residuals.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Composes the two similarity factors into `U = (I + G_m V)(I + G_k X*)`
/// and inverts it. Returns `(U, U^{-1})`.
pub fn assemble_transform(
    v: &BlockMatrix,
    x_star: &BlockMatrix,
    m: i32,
    k: i32,
) -> Result<(BlockMatrix, BlockMatrix)> {
    let gv = solve_commutator(v, m);
    let gx = solve_commutator(x_star, k);
    let w = gv.add(&gx)?.add(&gv.mul(&gx)?)?;
    let id = BlockMatrix::identity(*v.window());
    let u = id.add(&w)?;
    let u_inv = id.add(&w.invert_i_plus()?)?;
    Ok((u, u_inv))
}

/// Block diagonal extracted from the fixed point: the dense central block
/// on modes `|l| <= k` plus one `d x d` block per outer mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalBlocks {
    window: TruncationWindow,
    k: i32,
    /// `(2k+1)d` square central block.
    pub central: CMatrix,
    /// Diagonal blocks for `|l| > k`; absent entries are zero.
    pub outer: BTreeMap<i32, CMatrix>,
}

impl DiagonalBlocks {
    #[inline]
    pub fn k(&self) -> i32 {
        self.k
    }

    #[inline]
    pub fn window(&self) -> &TruncationWindow {
        &self.window
    }

    pub fn outer_or_zero(&self, l: i32) -> CMatrix {
        self.outer
            .get(&l)
            .cloned()
            .unwrap_or_else(|| CMatrix::zeros(self.window.dim(), self.window.dim()))
    }

    /// Reassembles the blocks into a block matrix; equals the diagonal part
    /// of the fixed point at radius `k`.
    pub fn to_block_matrix(&self) -> BlockMatrix {
        let d = self.window.dim();
        let k = self.k;
        let mut out = BlockMatrix::new(self.window);
        for j in -k..=k {
            for l in -k..=k {
                let ro = ((j + k) as usize) * d;
                let co = ((l + k) as usize) * d;
                let b = CMatrix::from_fn(d, d, |r, c| self.central[(ro + r, co + c)]);
                out.set_block(j, l, b).expect("index in window");
            }
        }
        for (&l, b) in &self.outer {
            out.set_block(l, l, b.clone()).expect("index in window");
        }
        out
    }
}

pub fn diagonal_blocks(x_star: &BlockMatrix, k: i32) -> DiagonalBlocks {
    let w = *x_star.window();
    let d = w.dim();
    let side = ((2 * k + 1) as usize) * d;
    let mut central = CMatrix::zeros(side, side);
    for j in -k..=k {
        for l in -k..=k {
            if let Some(b) = x_star.block(j, l) {
                let ro = ((j + k) as usize) * d;
                let co = ((l + k) as usize) * d;
                for r in 0..d {
                    for c in 0..d {
                        central[(ro + r, co + c)] = b[(r, c)];
                    }
                }
            }
        }
    }
    let mut outer = BTreeMap::new();
    for l in w.modes() {
        if l.abs() > k {
            if let Some(b) = x_star.block(l, l) {
                outer.insert(l, b.clone());
            }
        }
    }
    DiagonalBlocks {
        window: w,
        k,
        central,
        outer,
    }
}

/// Tunable knobs of the pipeline; the defaults match the tolerances the
/// test suite pins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityOptions {
    /// Stage-one threshold on `|G_m V|`; must be below one, and the default
    /// of 0.5 leaves contraction headroom for stage two.
    pub theta: f64,
    /// Fixed-point step tolerance, relative to `|Vt|`.
    pub fixed_point_tol: f64,
    /// Cap on fixed-point iterations.
    pub max_iter: usize,
}

impl Default for SimilarityOptions {
    fn default() -> Self {
        Self {
            theta: 0.5,
            fixed_point_tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Diagnostics accumulated by the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityLog {
    /// `|G_m V|` at the selected radius.
    pub gamma_v_norm: f64,
    /// `|Vt|` in the blockwise HS norm.
    pub v_tilde_norm: f64,
    /// `|Vt|_M` (reweighted norm).
    pub v_tilde_weighted_norm: f64,
    /// The certificate `4 gamma_bound(k+1) |Vt|_M`; below one when
    /// stage two is certified.
    pub contraction_certificate: f64,
    /// Fixed-point iteration record.
    pub fixed_point: FixedPointLog,
    /// `|U - I|` of the composed transform.
    pub transform_perturbation_norm: f64,
    /// Absolute fixed-point tolerance used.
    pub fixed_point_tol_abs: f64,
}

/// Outcome of the full two-stage pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    pub m: i32,
    pub k: i32,
    /// Stage-one transformed potential `Vt`.
    pub v_tilde: BlockMatrix,
    /// Fixed point of the quadratic map with `B = Vt`.
    pub x_star: BlockMatrix,
    /// Composed transform `U` and its inverse.
    pub transform: BlockMatrix,
    pub transform_inv: BlockMatrix,
    /// Block diagonal `V0` of the similar operator `Lambda - V0`.
    pub v0: DiagonalBlocks,
    pub log: SimilarityLog,
}

impl Similarity {
    #[inline]
    pub fn window(&self) -> &TruncationWindow {
        self.v_tilde.window()
    }
}

/// Runs the full pipeline on a potential.
///
/// A zero transformed potential (in particular a zero potential) skips the
/// fixed-point stage: the operator is already block diagonal at `k = m`.
pub fn similarity_transform(
    spec: &PotentialSpec,
    options: &SimilarityOptions,
) -> Result<Similarity> {
    if !(options.theta > 0.0 && options.theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 1), got {}",
            options.theta
        )));
    }
    let v = spec.v_matrix();
    let m = select_first_radius(&v, options.theta)?;
    let gamma_v_norm = solve_commutator(&v, m).hs_norm_fine();
    let (v_tilde, _factor) = preliminary_similarity(&v, m)?;
    let v_tilde_norm = v_tilde.hs_norm_fine();

    let (k, x_star, fp_log, weighted, certificate, tol_abs);
    if v_tilde.is_zero() {
        // Degenerate case: nothing left to diagonalize.
        k = m;
        x_star = BlockMatrix::new(*v.window());
        fp_log = FixedPointLog {
            residuals: Vec::new(),
            ball_radius: 0.0,
            max_ball_distance: 0.0,
        };
        weighted = 0.0;
        certificate = 0.0;
        tol_abs = 0.0;
    } else {
        let weights = DecayWeights::of(&v_tilde)?;
        k = select_second_radius(&v_tilde, &weights, m)?;
        weighted = weighted_norm(&v_tilde, &weights);
        certificate = 4.0 * weights.gamma_bound(k + 1) * weighted;
        tol_abs = options.fixed_point_tol * v_tilde_norm;
        let (x, log) = solve_fixed_point(&v_tilde, k, tol_abs, options.max_iter)?;
        x_star = x;
        fp_log = log;
    }

    let (transform, transform_inv) = assemble_transform(&v, &x_star, m, k)?;
    let v0 = diagonal_blocks(&x_star, k);
    let id = BlockMatrix::identity(*v.window());
    let transform_perturbation_norm = transform.sub(&id)?.hs_norm_fine();
    Ok(Similarity {
        m,
        k,
        v_tilde,
        x_star,
        transform,
        transform_inv,
        v0,
        log: SimilarityLog {
            gamma_v_norm,
            v_tilde_norm,
            v_tilde_weighted_norm: weighted,
            contraction_certificate: certificate,
            fixed_point: fp_log,
            transform_perturbation_norm,
            fixed_point_tol_abs: tol_abs,
        },
    })
}
