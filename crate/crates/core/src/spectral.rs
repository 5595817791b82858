//! Spectrum, spectral projections and equiconvergence diagnostics derived
//! from a converged similarity.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::blockspace::BlockMatrix;
use crate::error::Result;
use crate::linalg::CMatrix;
use crate::similarity::{DecayWeights, Similarity};
use crate::transforms::solve_commutator;
use crate::C64;

/// A cell of the coarse resolution used by the pipeline: the merged center
/// or one outer singleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Central,
    Outer(i32),
}

/// Eigenvalues of the block-diagonalized operator, grouped by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub k: i32,
    /// Eigenvalues of the central generator block `Lambda_(k) - V0_(k)`.
    pub central: Vec<C64>,
    /// Eigenvalues of `lambda_l I - V0_l` per outer mode.
    pub outer: BTreeMap<i32, Vec<C64>>,
    /// Partial sums `sum_{k < |l| <= n} |V0_l|^2` for `n = k+1 ..= N`;
    /// their flattening witnesses the square-summability of the block
    /// diagonal.
    pub tail_partial_sums: Vec<(i32, f64)>,
}

impl SpectrumReport {
    /// All eigenvalues with multiplicity.
    pub fn all(&self) -> Vec<C64> {
        let mut out = self.central.clone();
        for evs in self.outer.values() {
            out.extend_from_slice(evs);
        }
        out
    }

    /// Central eigenvalues plus outer eigenvalues for `|l| <= cut`.
    pub fn up_to_mode(&self, cut: i32) -> Vec<C64> {
        let mut out = self.central.clone();
        for (&l, evs) in &self.outer {
            if l.abs() <= cut {
                out.extend_from_slice(evs);
            }
        }
        out
    }
}

/// The generator blocks of the similar operator `Lambda - V0`: the sign
/// convention is `L0 - V0` taken literally, so the central block is
/// `Lambda_(k) - V0_(k)` and the outer blocks are `lambda_l I - V0_l`.
pub fn generator_block(sim: &Similarity, cell: Cell) -> CMatrix {
    let w = *sim.window();
    let d = w.dim();
    match cell {
        Cell::Central => {
            let k = sim.k;
            let mut g = sim.v0.central.scale(C64::new(-1.0, 0.0));
            for j in -k..=k {
                let off = ((j + k) as usize) * d;
                let lam = w.eigenvalue(j);
                for r in 0..d {
                    g[(off + r, off + r)] += lam;
                }
            }
            g
        }
        Cell::Outer(l) => {
            let mut g = sim.v0.outer_or_zero(l).scale(C64::new(-1.0, 0.0));
            let lam = w.eigenvalue(l);
            for r in 0..d {
                g[(r, r)] += lam;
            }
            g
        }
    }
}

/// Spectrum of the operator: a dense eigensolve of the central generator
/// block plus `d x d` eigensolves per outer block.
pub fn spectrum(sim: &Similarity) -> Result<SpectrumReport> {
    let w = *sim.window();
    let k = sim.k;
    let central = generator_block(sim, Cell::Central).eigenvalues()?;
    let mut outer = BTreeMap::new();
    for l in w.modes() {
        if l.abs() > k {
            let evs = generator_block(sim, Cell::Outer(l)).eigenvalues()?;
            outer.insert(l, evs);
        }
    }
    let mut tail_partial_sums = Vec::new();
    let mut acc = 0.0_f64;
    for n in (k + 1)..=w.half_width() {
        for l in [-n, n] {
            let s = sim.v0.outer_or_zero(l).spectral_norm();
            acc += s * s;
        }
        tail_partial_sums.push((n, acc));
    }
    Ok(SpectrumReport {
        k,
        central,
        outer,
        tail_partial_sums,
    })
}

/// Projection of a base cell, conjugated through the similarity:
/// `P~ = U P U^{-1}`.
pub fn spectral_projection(sim: &Similarity, cell: Cell) -> Result<BlockMatrix> {
    let w = *sim.window();
    let mut p = BlockMatrix::new(w);
    let id = CMatrix::identity(w.dim());
    match cell {
        Cell::Central => {
            for l in -sim.k..=sim.k {
                p.set_block(l, l, id.clone())?;
            }
        }
        Cell::Outer(l) => {
            p.set_block(l, l, id)?;
        }
    }
    sim.transform.mul(&p)?.mul(&sim.transform_inv)
}

/// Equiconvergence gap at cutoff `n` together with the ingredients of its
/// theoretical envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionGap {
    pub n: i32,
    /// `| P~_(k) + sum_{k<|l|<=n} P~_l - P_(k) - sum_{k<|l|<=n} P_l |` in
    /// the fine blockwise HS norm.
    pub gap: f64,
    /// The envelope factor `alpha(Omega, G_0 V) + alpha(Omega, V)^2` with
    /// `Omega = {|j| > n}`; a single fitted constant times this factor
    /// dominates the gap sequence.
    pub bound_factor: f64,
}

/// Computes the projection gap at cutoff `n` (requires `k < n <= N`).
pub fn equiconvergence_gap(
    sim: &Similarity,
    v: &BlockMatrix,
    n: i32,
) -> Result<ProjectionGap> {
    let w = *sim.window();
    let k = sim.k;
    assert!(k < n && n <= w.half_width(), "cutoff must lie in (k, N]");
    // Partial sum of conjugated minus base projections. P~(cells) is
    // computed as U P(cells) U^{-1} in one product.
    let mut p = BlockMatrix::new(w);
    let id = CMatrix::identity(w.dim());
    for l in w.modes() {
        if l.abs() <= n {
            p.set_block(l, l, id.clone())?;
        }
    }
    let conjugated = sim.transform.mul(&p)?.mul(&sim.transform_inv)?;
    let gap = conjugated.sub(&p)?.hs_norm_fine();

    let bound_factor = if n >= w.half_width() || v.is_zero() {
        0.0
    } else {
        let a_v = DecayWeights::of(v)?.tail_max(n);
        let gv = solve_commutator(v, 0);
        let a_gv = if gv.is_zero() {
            0.0
        } else {
            DecayWeights::of(&gv)?.tail_max(n)
        };
        a_gv + a_v * a_v
    };
    Ok(ProjectionGap {
        n,
        gap,
        bound_factor,
    })
}

/// Interior-window intertwining residual `|(Lambda - V) U - U (Lambda - V0)|`.
///
/// The margin excludes the coefficient band of the potential plus `k`
/// modes at each edge, where truncation corrupts the products.
pub fn similarity_residual(v: &BlockMatrix, sim: &Similarity, band: i32) -> Result<f64> {
    let w = *sim.window();
    let lam = BlockMatrix::mode_diagonal(w);
    let l_op = lam.sub(v)?;
    let l0_op = lam.sub(&sim.v0.to_block_matrix())?;
    let residual = l_op
        .mul(&sim.transform)?
        .sub(&sim.transform.mul(&l0_op)?)?;
    let margin = band + sim.k;
    Ok(residual.interior(margin).hs_norm_fine())
}

/// Largest block norm of the diagonal potential beyond mode `n`:
/// `sup_{|l| > n} |V0_l|` over the window.
pub fn outer_block_norm_sup(sim: &Similarity, n: i32) -> f64 {
    let w = *sim.window();
    let mut best = 0.0_f64;
    for l in w.modes() {
        if l.abs() > n.max(sim.k) {
            let s = sim.v0.outer_or_zero(l).spectral_norm();
            if s > best {
                best = s;
            }
        }
    }
    best
}

/// Gershgorin-style locality radius for an outer eigenvalue: the distance
/// from `lambda_l` is at most the block norm.
pub fn eigenvalue_locality(sim: &Similarity, report: &SpectrumReport) -> f64 {
    let w = *sim.window();
    let mut worst = 0.0_f64;
    for (&l, evs) in &report.outer {
        let radius = sim.v0.outer_or_zero(l).spectral_norm();
        let lam = w.eigenvalue(l);
        for mu in evs {
            let excess = (mu - lam).norm() - radius;
            if excess > worst {
                worst = excess;
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockspace::TruncationWindow;
    use crate::fmath;
    use crate::linalg::c64;
    use crate::potential::PotentialSpec;
    use crate::similarity::{similarity_transform, SimilarityOptions};

    fn win(n: i32) -> TruncationWindow {
        TruncationWindow::new(2.0 * core::f64::consts::PI, 1, n).unwrap()
    }

    fn constant_similarity(c: f64, n: i32) -> Similarity {
        let spec = PotentialSpec::constant_over(win(n), c).unwrap();
        similarity_transform(&spec, &SimilarityOptions::default()).unwrap()
    }

    #[test]
    fn zero_potential_spectrum_is_the_mode_lattice() {
        let spec = PotentialSpec::zero(win(6));
        let sim = similarity_transform(&spec, &SimilarityOptions::default()).unwrap();
        let report = spectrum(&sim).unwrap();
        assert_eq!(report.central.len(), 1);
        assert!(report.central[0].norm() < 1e-15);
        for (&l, evs) in &report.outer {
            assert_eq!(evs.len(), 1);
            assert!((evs[0] - win(6).eigenvalue(l)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_potential_spectrum_closed_form() {
        let c = 10.0;
        let sim = constant_similarity(c, 8);
        let report = spectrum(&sim).unwrap();
        assert!((report.central[0] - c64(-1.0 / c, 0.0)).norm() < 1e-12);
        for (&l, evs) in &report.outer {
            let ll = l as f64;
            let want = c64(0.0, ll * fmath::sqrt(1.0 - 1.0 / (c * c * ll * ll)));
            assert!((evs[0] - want).norm() < 1e-10, "mode {l}");
        }
        // locality: outer eigenvalues stay within the block-norm disk
        assert!(eigenvalue_locality(&sim, &report) <= 1e-12);
    }

    #[test]
    fn projections_are_idempotent_and_resolve_identity() {
        let sim = constant_similarity(10.0, 8);
        let w = win(8);
        let mut sum = spectral_projection(&sim, Cell::Central).unwrap();
        let p = spectral_projection(&sim, Cell::Outer(3)).unwrap();
        let p2 = p.mul(&p).unwrap();
        assert!(p2.sub(&p).unwrap().hs_norm_fine() < 1e-9);
        // constant potential couples modes l and -l only
        for (&(j, l), _) in p.iter() {
            assert!(j.abs() == 3 && l.abs() == 3, "support at ({j},{l})");
        }
        for l in w.modes() {
            if l != 0 {
                sum = sum
                    .add(&spectral_projection(&sim, Cell::Outer(l)).unwrap())
                    .unwrap();
            }
        }
        let id = BlockMatrix::identity(w);
        assert!(sum.sub(&id).unwrap().hs_norm_fine() < 1e-9);
    }

    #[test]
    fn zero_potential_projections_are_exact() {
        let spec = PotentialSpec::zero(win(4));
        let sim = similarity_transform(&spec, &SimilarityOptions::default()).unwrap();
        for l in [1, -3] {
            let p = spectral_projection(&sim, Cell::Outer(l)).unwrap();
            let mut want = BlockMatrix::new(win(4));
            want.set_block(l, l, CMatrix::identity(1)).unwrap();
            assert!(p.sub(&want).unwrap().hs_norm_fine() < 1e-15);
        }
    }

    #[test]
    fn equiconvergence_gap_vanishes_for_zero_potential() {
        let spec = PotentialSpec::zero(win(6));
        let sim = similarity_transform(&spec, &SimilarityOptions::default()).unwrap();
        let v = spec.v_matrix();
        for n in 1..=6 {
            let g = equiconvergence_gap(&sim, &v, n).unwrap();
            assert_eq!(g.gap, 0.0);
        }
    }

    #[test]
    fn residual_of_the_constant_potential_is_tiny() {
        let sim = constant_similarity(10.0, 16);
        let spec = PotentialSpec::constant_over(win(16), 10.0).unwrap();
        let v = spec.v_matrix();
        let r = similarity_residual(&v, &sim, spec.band()).unwrap();
        assert!(r <= 1e-9, "residual {r}");
    }
}
