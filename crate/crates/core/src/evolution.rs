//! The operator group generated by the diagonalized operator, and mild
//! solutions of the homogeneous and forced problems.
//!
//! The group is applied as `U T~(t) U^{-1}` where `T~(t)` exponentiates the
//! generator blocks `Lambda_(k) - V0_(k)` and `lambda_l I - V0_l` cellwise.
//! Forced problems integrate the variation-of-constants formula with
//! adaptive Gauss-Legendre panels.

use alloc::vec;
use alloc::vec::Vec;

use crate::blockspace::{BlockMatrix, TruncationWindow};
use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg::CMatrix;
use crate::quadrature;
use crate::similarity::Similarity;
use crate::spectral::{generator_block, Cell};
use crate::C64;

/// A function in `L^2([0, omega], C^d)` through its windowed Fourier
/// coefficients, stored flat: mode `-N` first, `d` entries per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    window: TruncationWindow,
    coeffs: Vec<C64>,
}

impl EvolutionState {
    pub fn zeros(window: TruncationWindow) -> Self {
        Self {
            window,
            coeffs: vec![C64::new(0.0, 0.0); window.flat_dim()],
        }
    }

    pub fn from_coeffs(window: TruncationWindow, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != window.flat_dim() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "state has {} entries, window needs {}",
                coeffs.len(),
                window.flat_dim()
            )));
        }
        Ok(Self { window, coeffs })
    }

    /// Basis state: unit mass in fiber component `component` of mode `l`.
    pub fn mode(window: TruncationWindow, l: i32, component: usize) -> Result<Self> {
        if !window.contains(l) || component >= window.dim() {
            return Err(Error::InvalidParameter(alloc::format!(
                "mode {l} component {component} outside the window"
            )));
        }
        let mut s = Self::zeros(window);
        s.coeffs[window.offset(l) + component] = C64::new(1.0, 0.0);
        Ok(s)
    }

    #[inline]
    pub fn window(&self) -> &TruncationWindow {
        &self.window
    }

    #[inline]
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Coefficient vector of mode `l`.
    pub fn mode_coeff(&self, l: i32) -> &[C64] {
        let off = self.window.offset(l);
        &self.coeffs[off..off + self.window.dim()]
    }

    pub fn l2_norm(&self) -> f64 {
        fmath::sqrt(self.coeffs.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            window: self.window,
            coeffs,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            window: self.window,
            coeffs,
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            window: self.window,
            coeffs: self.coeffs.iter().map(|a| a * z).collect(),
        }
    }

    /// Physical-space value `x(s) = sum_l coeff(l) e^{i 2 pi l s / omega}`.
    pub fn sample(&self, s: f64) -> Vec<C64> {
        let d = self.window.dim();
        let mut out = vec![C64::new(0.0, 0.0); d];
        for l in self.window.modes() {
            let angle = 2.0 * core::f64::consts::PI * (l as f64) * s / self.window.omega();
            let phase = C64::new(fmath::cos(angle), fmath::sin(angle));
            let off = self.window.offset(l);
            for c in 0..d {
                out[c] += self.coeffs[off + c] * phase;
            }
        }
        out
    }
}

/// Generator blocks of the similar operator, with exponentials on demand.
#[derive(Debug, Clone)]
pub struct GroupBlocks {
    k: i32,
    window: TruncationWindow,
    central: CMatrix,
    outer: Vec<(i32, CMatrix)>,
}

impl GroupBlocks {
    pub fn of(sim: &Similarity) -> Self {
        let w = *sim.window();
        let central = generator_block(sim, Cell::Central);
        let outer = w
            .modes()
            .filter(|l| l.abs() > sim.k)
            .map(|l| (l, generator_block(sim, Cell::Outer(l))))
            .collect();
        Self {
            k: sim.k,
            window: w,
            central,
            outer,
        }
    }

    #[inline]
    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn generator(&self, cell: Cell) -> &CMatrix {
        match cell {
            Cell::Central => &self.central,
            Cell::Outer(l) => {
                &self
                    .outer
                    .iter()
                    .find(|(j, _)| *j == l)
                    .expect("outer mode in window")
                    .1
            }
        }
    }

    /// `e^{t G}` for the requested cell.
    pub fn exponential(&self, cell: Cell, t: f64) -> Result<CMatrix> {
        self.generator(cell).scale(C64::new(t, 0.0)).expm()
    }

    /// Applies the block-diagonal group `T~(t)` to a coefficient vector.
    pub fn apply_diagonal(&self, t: f64, state: &EvolutionState) -> Result<EvolutionState> {
        let w = self.window;
        let d = w.dim();
        let mut out = EvolutionState::zeros(w);
        // central cell
        let e = self.exponential(Cell::Central, t)?;
        let mut xin = Vec::with_capacity(((2 * self.k + 1) as usize) * d);
        for l in -self.k..=self.k {
            xin.extend_from_slice(state.mode_coeff(l));
        }
        let xout = e.matvec(&xin);
        for (idx, l) in (-self.k..=self.k).enumerate() {
            let off = w.offset(l);
            for c in 0..d {
                out.coeffs_mut()[off + c] = xout[idx * d + c];
            }
        }
        // outer cells
        for (l, g) in &self.outer {
            let e = g.scale(C64::new(t, 0.0)).expm()?;
            let xout = e.matvec(state.mode_coeff(*l));
            let off = w.offset(*l);
            out.coeffs_mut()[off..off + d].copy_from_slice(&xout);
        }
        Ok(out)
    }
}

/// Applies the group `T(t) = U T~(t) U^{-1}` to an initial state.
pub fn group_apply(sim: &Similarity, t: f64, phi: &EvolutionState) -> Result<EvolutionState> {
    let blocks = GroupBlocks::of(sim);
    group_apply_with(sim, &blocks, t, phi)
}

/// The group at time `t` assembled as a block matrix, `U T~(t) U^{-1}`;
/// used by diagnostics that need norms of the whole operator.
pub fn group_operator(sim: &Similarity, t: f64) -> Result<BlockMatrix> {
    let blocks = GroupBlocks::of(sim);
    let w = *sim.window();
    let d = w.dim();
    let k = sim.k;
    let mut diagonal = BlockMatrix::new(w);
    let central = blocks.exponential(Cell::Central, t)?;
    for j in -k..=k {
        for l in -k..=k {
            let ro = ((j + k) as usize) * d;
            let co = ((l + k) as usize) * d;
            let b = CMatrix::from_fn(d, d, |r, c| central[(ro + r, co + c)]);
            diagonal.set_block(j, l, b)?;
        }
    }
    for l in w.modes() {
        if l.abs() > k {
            diagonal.set_block(l, l, blocks.exponential(Cell::Outer(l), t)?)?;
        }
    }
    sim.transform.mul(&diagonal)?.mul(&sim.transform_inv)
}

/// Numerically measured exponential growth rate of the group,
/// `log |T(t)| / t` with the dense operator norm, against the spectral
/// abscissa `max Re sigma(L)`. The two agree for this operator class; the
/// pair is reported, not asserted, by the diagnostics.
pub fn growth_rate(sim: &Similarity, t: f64) -> Result<f64> {
    let norm = group_operator(sim, t)?.to_dense().spectral_norm();
    Ok(fmath::ln(norm) / t)
}

/// Same as [`group_apply`] with precomputed generator blocks.
pub fn group_apply_with(
    sim: &Similarity,
    blocks: &GroupBlocks,
    t: f64,
    phi: &EvolutionState,
) -> Result<EvolutionState> {
    let w = *sim.window();
    let back = EvolutionState::from_coeffs(w, sim.transform_inv.apply(phi.coeffs()))?;
    let evolved = blocks.apply_diagonal(t, &back)?;
    EvolutionState::from_coeffs(w, sim.transform.apply(evolved.coeffs()))
}

/// Trajectory of the homogeneous problem at the requested times.
pub fn solve_homogeneous(
    sim: &Similarity,
    phi: &EvolutionState,
    times: &[f64],
) -> Result<Vec<EvolutionState>> {
    let blocks = GroupBlocks::of(sim);
    times
        .iter()
        .map(|&t| group_apply_with(sim, &blocks, t, phi))
        .collect()
}

/// Quadrature tolerance for the variation-of-constants integral.
pub const DUHAMEL_TOL: f64 = 1e-8;

/// Mild solution of the forced problem at the requested times:
/// `u(t) = T(t) phi + int_0^t T(t - tau) f(tau) dtau`.
pub fn solve_inhomogeneous(
    sim: &Similarity,
    phi: &EvolutionState,
    forcing: &dyn Fn(f64) -> EvolutionState,
    times: &[f64],
) -> Result<Vec<EvolutionState>> {
    let blocks = GroupBlocks::of(sim);
    let w = *sim.window();
    let dim = w.flat_dim();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let homogeneous = group_apply_with(sim, &blocks, t, phi)?;
        let mut quad_err = None;
        let integral = quadrature::integrate(
            |tau| {
                let f_tau = forcing(tau);
                match group_apply_with(sim, &blocks, t - tau, &f_tau) {
                    Ok(state) => state.coeffs().to_vec(),
                    Err(e) => {
                        quad_err = Some(e);
                        vec![C64::new(0.0, 0.0); dim]
                    }
                }
            },
            0.0,
            t,
            dim,
            DUHAMEL_TOL,
        )?;
        if let Some(e) = quad_err {
            return Err(e);
        }
        let duhamel = EvolutionState::from_coeffs(w, integral)?;
        out.push(homogeneous.add(&duhamel));
    }
    Ok(out)
}

/// Truncation-error estimate for the generalized Fourier expansion of the
/// group orbit of `U psi` cut at mode `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    /// `C e^{kappa_{n+1} |t|} (sum_{|l| > n} (|psi_hat(l)|^2 + beta_l^2 |psi|^2))^{1/2}`
    /// with `C = (1 + |W|)(1 + |(I+W)^{-1}|)`, `beta_l` the row Frobenius
    /// norms of `W = U - I`, and `kappa` the outer-block norm sup.
    pub bound: f64,
    /// Actually measured `|T(t) U psi - (central + sum_{k<|l|<=n}) orbit|`.
    pub true_error: f64,
}

/// Evaluates the tail bound and the true truncation error at cutoff `n`
/// (requires `k < n < N`) and time `t`.
pub fn tail_bound(
    sim: &Similarity,
    psi: &EvolutionState,
    n: i32,
    t: f64,
) -> Result<TailEstimate> {
    let w = *sim.window();
    assert!(
        sim.k < n && n < w.half_width(),
        "cutoff must lie strictly between k and N"
    );
    let blocks = GroupBlocks::of(sim);
    let id = crate::blockspace::BlockMatrix::identity(w);
    let w_pert = sim.transform.sub(&id)?;
    let w_inv_pert = sim.transform_inv.sub(&id)?;
    // |(I+W)^{-1}| <= 1 + |(I+W)^{-1} - I|, all in the blockwise HS norm.
    let inv_norm_bound = 1.0 + w_inv_pert.hs_norm_fine();
    let c_const = (1.0 + w_pert.hs_norm_fine()) * (1.0 + inv_norm_bound);
    let kappa = crate::spectral::outer_block_norm_sup(sim, n);
    let psi_norm = psi.l2_norm();
    let mut tail_sq = 0.0_f64;
    for l in w.modes() {
        if l.abs() > n {
            let mode_sq: f64 = psi.mode_coeff(l).iter().map(|z| z.norm_sqr()).sum();
            let beta = w_pert.row_frobenius(l);
            tail_sq += mode_sq + beta * beta * psi_norm * psi_norm;
        }
    }
    let bound = c_const * fmath::exp(kappa * fmath::abs(t)) * fmath::sqrt(tail_sq);

    // True error: T(t) U psi = U T~(t) psi, so the dropped part is
    // U applied to the orbit of the tail modes.
    let mut tail_state = EvolutionState::zeros(w);
    for l in w.modes() {
        if l.abs() > n {
            let off = w.offset(l);
            let src = psi.mode_coeff(l).to_vec();
            tail_state.coeffs_mut()[off..off + w.dim()].copy_from_slice(&src);
        }
    }
    let evolved_tail = blocks.apply_diagonal(t, &tail_state)?;
    let dropped = EvolutionState::from_coeffs(w, sim.transform.apply(evolved_tail.coeffs()))?;
    Ok(TailEstimate {
        bound,
        true_error: dropped.l2_norm(),
    })
}
