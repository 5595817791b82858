//! Potential ingestion: Fourier coefficients of `V`, the Hankel block
//! matrix it induces, and the standing admissibility checks.

use alloc::collections::BTreeMap;
use alloc::format;

use crate::blockspace::{BlockMatrix, TruncationWindow};
use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg::CMatrix;
use crate::C64;

/// Fourier coefficients `V_hat(n)` of the potential for `|n| <= 2N`.
///
/// The coefficient band is twice the operator window because the block at
/// `(j, l)` needs `V_hat(j + l)` with `|j + l| <= 2N`; a narrower table
/// would zero-pad silently.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    window: TruncationWindow,
    coeffs: BTreeMap<i32, CMatrix>,
}

/// Windowed values of the two standing conditions on the potential, plus
/// which sufficient criterion backs the second one.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// `sum_n |V_hat(n)|^2` over the stored band (square-summability).
    pub sum_sq: f64,
    /// `sum_n |V_hat(n)|` over the stored band.
    pub l1_sum: f64,
    /// Blockwise HS norm of `Z = V (G_0 V)` evaluated by the direct double
    /// sum over the window.
    pub cond4_norm: f64,
    /// Which sufficient condition certifies the double-sum condition.
    pub sufficiency: Sufficiency,
}

/// Sufficient criteria for the double-sum condition. At a finite window
/// with a finite-dimensional fiber both always hold; the variants exist to
/// keep the report meaningful if either premise is ever relaxed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sufficiency {
    /// The coefficient sequence is absolutely summable.
    AbsolutelySummable,
    /// The potential takes Hilbert-Schmidt values.
    HsValued,
    /// Neither criterion applies; the condition was only measured.
    Neither,
}

impl PotentialSpec {
    /// Builds a spec from explicit `(n, coefficient)` pairs.
    pub fn from_coefficients(
        window: TruncationWindow,
        entries: impl IntoIterator<Item = (i32, CMatrix)>,
    ) -> Result<Self> {
        let band = 2 * window.half_width();
        let d = window.dim();
        let mut coeffs = BTreeMap::new();
        for (n, c) in entries {
            if n.abs() > band {
                return Err(Error::InvalidParameter(format!(
                    "coefficient index {n} outside the stored band [-{band}, {band}]"
                )));
            }
            if c.nrows() != d || c.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient {n} is {}x{}, expected {d}x{d}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            if !c.is_zero() {
                coeffs.insert(n, c);
            }
        }
        Ok(Self { window, coeffs })
    }

    /// The constant potential `V(s) = (1/c) I_d`.
    pub fn constant_over(window: TruncationWindow, c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "constant potential needs a finite nonzero c, got {c}"
            )));
        }
        let coeff = CMatrix::identity(window.dim()).scale(C64::new(1.0 / c, 0.0));
        Self::from_coefficients(window, [(0, coeff)])
    }

    pub fn zero(window: TruncationWindow) -> Self {
        Self {
            window,
            coeffs: BTreeMap::new(),
        }
    }

    /// Discrete Fourier coefficients from `M >= 4N + 1` equispaced samples
    /// of the potential on `[0, omega)`:
    /// `V_hat(n) = (1/M) sum_p samples[p] e^{-i 2 pi n p / M}`.
    ///
    /// Exact (to rounding) for trigonometric polynomials of degree up to
    /// `M - 1 - 2N`; higher harmonics alias into the stored band.
    pub fn from_samples(window: TruncationWindow, samples: &[CMatrix]) -> Result<Self> {
        let band = 2 * window.half_width();
        let needed = (2 * band + 1) as usize;
        if samples.len() < needed {
            return Err(Error::TooFewSamples {
                needed,
                got: samples.len(),
            });
        }
        let d = window.dim();
        for (p, s) in samples.iter().enumerate() {
            if s.nrows() != d || s.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "sample {p} is {}x{}, expected {d}x{d}",
                    s.nrows(),
                    s.ncols()
                )));
            }
        }
        let m = samples.len();
        let mut coeffs = BTreeMap::new();
        for n in -band..=band {
            let mut acc = CMatrix::zeros(d, d);
            for (p, s) in samples.iter().enumerate() {
                let angle = -2.0 * core::f64::consts::PI * (n as f64) * (p as f64) / (m as f64);
                let phase = C64::new(fmath::cos(angle), fmath::sin(angle));
                acc = acc.add(&s.scale(phase));
            }
            let coeff = acc.scale(C64::new(1.0 / m as f64, 0.0));
            // Keep the table sparse; rounding dust below 1e-300 is noise.
            if coeff.data().iter().any(|z| z.norm() > 0.0) {
                coeffs.insert(n, coeff);
            }
        }
        Ok(Self { window, coeffs })
    }

    #[inline]
    pub fn window(&self) -> &TruncationWindow {
        &self.window
    }

    pub fn coefficient(&self, n: i32) -> Option<&CMatrix> {
        self.coeffs.get(&n)
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&i32, &CMatrix)> {
        self.coeffs.iter()
    }

    /// Largest `|n|` carrying a nonzero coefficient (0 for the zero spec).
    pub fn band(&self) -> i32 {
        self.coeffs.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Hankel block matrix of the potential: block `(j, l)` is
    /// `V_hat(j + l)`.
    pub fn v_matrix(&self) -> BlockMatrix {
        let w = self.window;
        let mut v = BlockMatrix::new(w);
        for (&n, c) in &self.coeffs {
            for j in w.modes() {
                let l = n - j;
                if w.contains(l) {
                    v.set_block(j, l, c.clone()).expect("index in window");
                }
            }
        }
        v
    }

    /// Windowed evaluation of both standing conditions. Advisory only: at a
    /// finite window every operator is Hilbert-Schmidt, so the method
    /// proceeds regardless of the report.
    pub fn admissibility(&self) -> AdmissibilityReport {
        let mut sum_sq = 0.0_f64;
        let mut l1_sum = 0.0_f64;
        for c in self.coeffs.values() {
            let n = c.spectral_norm();
            sum_sq += n * n;
            l1_sum += n;
        }
        let cond4_norm = self.cond4_matrix().hs_norm_fine();
        let sufficiency = if !self.coeffs.is_empty() {
            Sufficiency::AbsolutelySummable
        } else if self.window.dim() < usize::MAX {
            Sufficiency::HsValued
        } else {
            Sufficiency::Neither
        };
        AdmissibilityReport {
            sum_sq,
            l1_sum,
            cond4_norm,
            sufficiency,
        }
    }

    /// Direct double-sum evaluation of `Z = V (G_0 V)`: block `(j, l)` is
    /// `sum_{n != l, |n| <= N} V_hat(j + n) V_hat(l + n) / (lambda_n - lambda_l)`.
    ///
    /// This is an independent code path from the block product in
    /// `transforms`; the two agree entrywise on the window because both
    /// truncate the inner sum identically.
    pub fn cond4_matrix(&self) -> BlockMatrix {
        let w = self.window;
        let mut z = BlockMatrix::new(w);
        for j in w.modes() {
            for l in w.modes() {
                let mut acc = CMatrix::zeros(w.dim(), w.dim());
                let mut touched = false;
                for n in w.modes() {
                    if n == l {
                        continue;
                    }
                    let (Some(a), Some(b)) =
                        (self.coeffs.get(&(j + n)), self.coeffs.get(&(l + n)))
                    else {
                        continue;
                    };
                    let weight = (w.eigenvalue(n) - w.eigenvalue(l)).inv();
                    acc = acc.add(&a.mul(b).scale(weight));
                    touched = true;
                }
                if touched {
                    z.set_block(j, l, acc).expect("index in window");
                }
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::transforms::solve_commutator;

    fn win(d: usize, n: i32) -> TruncationWindow {
        TruncationWindow::new(2.0 * core::f64::consts::PI, d, n).unwrap()
    }

    #[test]
    fn constant_potential_coefficients() {
        let w = win(1, 8);
        let samples: Vec<CMatrix> = (0..64).map(|_| CMatrix::scalar(c64(0.1, 0.0))).collect();
        let spec = PotentialSpec::from_samples(w, &samples).unwrap();
        let c0 = spec.coefficient(0).unwrap();
        assert!((c0[(0, 0)] - c64(0.1, 0.0)).norm() < 1e-15);
        for n in 1..=16 {
            assert!(spec.coefficient(n).map_or(true, |c| c.spectral_norm() < 1e-15));
            assert!(spec
                .coefficient(-n)
                .map_or(true, |c| c.spectral_norm() < 1e-15));
        }
    }

    #[test]
    fn single_harmonic_lands_on_one_coefficient() {
        let w = win(2, 4);
        let a = CMatrix::from_rows(&[
            vec![c64(0.3, 0.1), c64(0.0, 0.2)],
            vec![c64(-0.1, 0.0), c64(0.4, -0.3)],
        ]);
        let m = 48;
        let samples: Vec<CMatrix> = (0..m)
            .map(|p| {
                let angle = 2.0 * core::f64::consts::PI * (p as f64) / (m as f64);
                a.scale(c64(fmath::cos(angle), fmath::sin(angle)))
            })
            .collect();
        let spec = PotentialSpec::from_samples(w, &samples).unwrap();
        let got = spec.coefficient(1).unwrap();
        assert!(got.sub(&a).frobenius_norm() < 1e-13);
        for n in -8..=8 {
            if n != 1 {
                assert!(
                    spec.coefficient(n).map_or(true, |c| c.frobenius_norm() < 1e-13),
                    "stray coefficient at {n}"
                );
            }
        }
    }

    #[test]
    fn cosine_splits_into_two_half_coefficients() {
        // V(s) = cos(2 pi s / omega), d = 1, M = 64, N = 8
        let w = win(1, 8);
        let m = 64;
        let samples: Vec<CMatrix> = (0..m)
            .map(|p| {
                let angle = 2.0 * core::f64::consts::PI * (p as f64) / (m as f64);
                CMatrix::scalar(c64(fmath::cos(angle), 0.0))
            })
            .collect();
        let spec = PotentialSpec::from_samples(w, &samples).unwrap();
        for n in [-1, 1] {
            let got = spec.coefficient(n).unwrap()[(0, 0)];
            assert!((got - c64(0.5, 0.0)).norm() < 1e-12);
        }
        // real potential: V_hat(-n) = conj(V_hat(n))
        for n in 1..=16 {
            let a = spec
                .coefficient(n)
                .map(|c| c[(0, 0)])
                .unwrap_or(c64(0.0, 0.0));
            let b = spec
                .coefficient(-n)
                .map(|c| c[(0, 0)])
                .unwrap_or(c64(0.0, 0.0));
            assert!((a.conj() - b).norm() < 1e-13);
        }
    }

    #[test]
    fn too_few_samples() {
        let w = win(1, 8);
        let samples: Vec<CMatrix> = (0..32).map(|_| CMatrix::scalar(c64(1.0, 0.0))).collect();
        assert!(matches!(
            PotentialSpec::from_samples(w, &samples),
            Err(Error::TooFewSamples { needed: 33, .. })
        ));
    }

    #[test]
    fn hankel_structure() {
        let w = win(1, 4);
        let spec = PotentialSpec::from_coefficients(
            w,
            [(1, CMatrix::scalar(c64(0.7, -0.2)))],
        )
        .unwrap();
        let v = spec.v_matrix();
        for j in w.modes() {
            for l in w.modes() {
                let b = v.block_or_zero(j, l)[(0, 0)];
                if j + l == 1 {
                    assert!((b - c64(0.7, -0.2)).norm() < 1e-15);
                } else {
                    assert_eq!(b, c64(0.0, 0.0));
                }
            }
        }
        // constant spec: anti-diagonal delta
        let c = 10.0;
        let spec = PotentialSpec::constant_over(w, c).unwrap();
        let v = spec.v_matrix();
        for j in w.modes() {
            for l in w.modes() {
                let b = v.block_or_zero(j, l)[(0, 0)];
                let want = if j + l == 0 { c64(0.1, 0.0) } else { c64(0.0, 0.0) };
                assert!((b - want).norm() < 1e-15);
            }
        }
        assert!(PotentialSpec::zero(w).v_matrix().is_zero());
    }

    #[test]
    fn constant_potential_norms() {
        // 17 anti-diagonal blocks of norm 1/10: HS norm sqrt(17)/10; the
        // weighted transform's HS norm bounds its true operator norm 1/20
        let w = win(1, 8);
        let spec = PotentialSpec::constant_over(w, 10.0).unwrap();
        let v = spec.v_matrix();
        assert!((v.hs_norm_fine() - fmath::sqrt(17.0) / 10.0).abs() < 1e-15);
        let gv = solve_commutator(&v, 0);
        let bound = gv
            .operator_norm_bound(&crate::blockspace::Resolution::fine(w))
            .unwrap();
        let true_norm = gv.to_dense().spectral_norm();
        assert!((true_norm - 0.05).abs() < 1e-12);
        assert!(bound >= true_norm);
        let sum: f64 = (1..=8).map(|j| 1.0 / ((j * j) as f64)).sum();
        assert!((bound - fmath::sqrt(2.0 * sum) / 20.0).abs() < 1e-14);
    }

    #[test]
    fn admissibility_of_the_constant_potential() {
        // Z = V (G_0 V) is diagonal with entries i / (2 j c^2)
        let c = 10.0;
        let w = win(1, 8);
        let spec = PotentialSpec::constant_over(w, c).unwrap();
        let z = spec.cond4_matrix();
        for j in w.modes() {
            for l in w.modes() {
                let got = z.block_or_zero(j, l)[(0, 0)];
                let want = if j == l && j != 0 {
                    c64(0.0, 1.0 / (2.0 * j as f64 * c * c))
                } else {
                    c64(0.0, 0.0)
                };
                assert!((got - want).norm() < 1e-15, "({j},{l}): {got} vs {want}");
            }
        }
        let report = spec.admissibility();
        assert!((report.sum_sq - 0.01).abs() < 1e-15);
        assert_eq!(report.sufficiency, Sufficiency::AbsolutelySummable);

        let zero = PotentialSpec::zero(w).admissibility();
        assert_eq!(zero.sum_sq, 0.0);
        assert_eq!(zero.cond4_norm, 0.0);
    }

    #[test]
    fn cond4_agrees_with_block_product() {
        // two-route check: direct double sum vs V * (G_0 V)
        let w = win(1, 8);
        let spec = PotentialSpec::from_coefficients(
            w,
            [
                (-1, CMatrix::scalar(c64(0.5, 0.0))),
                (1, CMatrix::scalar(c64(0.5, 0.0))),
            ],
        )
        .unwrap();
        let z = spec.cond4_matrix();
        let v = spec.v_matrix();
        let prod = v.mul(&solve_commutator(&v, 0)).unwrap();
        // both routes truncate the inner sum to the window identically, but
        // the contract only promises agreement on the interior
        let half = w.half_width() / 2;
        for j in -half..=half {
            for l in -half..=half {
                let a = z.block_or_zero(j, l)[(0, 0)];
                let b = prod.block_or_zero(j, l)[(0, 0)];
                assert!((a - b).norm() < 1e-12, "({j},{l}): {a} vs {b}");
            }
        }
        assert!(spec.admissibility().sum_sq - 0.5 < 1e-15);
    }
}
