//! Independent ground truth: a dense truncation of the operator assembled
//! straight from the coefficient table (bypassing every method-module
//! builder), its eigenvalues and exponential orbits, and the closed-form
//! reference for the constant scalar potential.
//!
//! The duplication with `blockspace`/`potential` is deliberate; an oracle
//! that shares builders with the code it checks certifies nothing.

use alloc::vec::Vec;

use crate::blockspace::TruncationWindow;
use crate::error::{Error, Result};
use crate::evolution::EvolutionState;
use crate::fmath;
use crate::linalg::CMatrix;
use crate::potential::PotentialSpec;
use crate::C64;

/// Dense `(2N+1)d` square matrix of `Lambda - V` in the Fourier basis.
#[derive(Debug, Clone)]
pub struct DenseTruncation {
    window: TruncationWindow,
    matrix: CMatrix,
}

impl DenseTruncation {
    #[inline]
    pub fn window(&self) -> &TruncationWindow {
        &self.window
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Assembles the dense truncation: entry block `(j, l)` is
/// `lambda_j delta_{jl} I - V_hat(j + l)`, written entry by entry from the
/// coefficient table.
pub fn dense_truncation(spec: &PotentialSpec) -> DenseTruncation {
    let w = *spec.window();
    let d = w.dim();
    let n = w.half_width();
    let mut matrix = CMatrix::zeros(w.flat_dim(), w.flat_dim());
    for j in -n..=n {
        let lam = w.eigenvalue(j);
        let ro = w.offset(j);
        for r in 0..d {
            matrix[(ro + r, ro + r)] = lam;
        }
        for l in -n..=n {
            if let Some(coeff) = spec.coefficient(j + l) {
                let co = w.offset(l);
                for r in 0..d {
                    for c in 0..d {
                        matrix[(ro + r, co + c)] -= coeff[(r, c)];
                    }
                }
            }
        }
    }
    DenseTruncation { window: w, matrix }
}

/// Eigenvalue multiset of the dense truncation.
pub fn spectrum(dt: &DenseTruncation) -> Result<Vec<C64>> {
    dt.matrix.eigenvalues()
}

/// Dense exponential orbit `e^{t (Lambda - V)} phi`.
pub fn evolve(dt: &DenseTruncation, phi: &EvolutionState, t: f64) -> Result<EvolutionState> {
    let e = dt.matrix.scale(C64::new(t, 0.0)).expm()?;
    EvolutionState::from_coeffs(dt.window, e.matvec(phi.coeffs()))
}

/// Golden values of the worked constant-potential example `V(s) = 1/c` on
/// the scalar fiber with period `2 pi`. Everything decouples into the 2x2
/// mode pairs `{j, -j}`, so the closed forms are exact on any window.
#[derive(Debug, Clone)]
pub struct ClosedFormReference {
    pub c: f64,
    pub window: TruncationWindow,
    /// `4 gamma_bound(k+1) |Vt|_M` evaluated on the closed-form stage-one
    /// output; below one certifies the fixed-point stage at `m = k = 0`.
    pub contraction_certificate: f64,
}

impl ClosedFormReference {
    fn v_j(&self, j: i32) -> f64 {
        let jj = j as f64;
        1.0 / (self.c * (4.0 * jj * jj * self.c * self.c - 1.0))
    }

    /// Full spectrum: `-1/c` plus `i j sqrt(1 - 1/(c j)^2)` per nonzero mode.
    pub fn spectrum(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.window.mode_count());
        out.push(C64::new(-1.0 / self.c, 0.0));
        for j in self.window.modes() {
            if j != 0 {
                out.push(self.eigenvalue(j));
            }
        }
        out
    }

    /// `i j sqrt(1 - 1/(c j)^2)` for `j != 0`.
    pub fn eigenvalue(&self, j: i32) -> C64 {
        let jj = j as f64;
        C64::new(
            0.0,
            jj * fmath::sqrt(1.0 - 1.0 / (self.c * self.c * jj * jj)),
        )
    }

    /// Diagonal fixed-point entry `x_j`. The constant eigenfunction pins
    /// `x_0 = +1/c`: the eigenvalue `-1/c` equals `lambda_0 - x_0`.
    pub fn fixed_point_diag(&self, j: i32) -> C64 {
        if j == 0 {
            return C64::new(1.0 / self.c, 0.0);
        }
        let jj = j as f64;
        C64::new(
            0.0,
            jj * (1.0 - fmath::sqrt(1.0 - 1.0 / (self.c * self.c * jj * jj))),
        )
    }

    /// Anti-diagonal fixed-point entry `y_j = (X*)_{j,-j}`, the small root
    /// of `(v_j / 4j^2) y^2 + (2 c v_j - 1) y + v_j = 0`, written in the
    /// cancellation-free form; symmetric in `j`.
    pub fn fixed_point_anti(&self, j: i32) -> C64 {
        assert!(j != 0);
        let jj = j as f64;
        let vj = self.v_j(j);
        let b = 1.0 - 2.0 * self.c * vj;
        let root = fmath::sqrt(b * b - vj * vj / (jj * jj));
        C64::new(2.0 * vj / (b + root), 0.0)
    }

    /// Entry of the transformed potential after stage one.
    pub fn v_tilde_entry(&self, j: i32, l: i32) -> C64 {
        if j == 0 && l == 0 {
            return C64::new(1.0 / self.c, 0.0);
        }
        let mut z = C64::new(0.0, 0.0);
        if j + l == 0 && j != 0 {
            z += C64::new(self.v_j(j), 0.0);
        }
        if j == l && j != 0 {
            z += C64::new(0.0, 2.0 * self.c * (j as f64) * self.v_j(j));
        }
        z
    }

    /// Entry of the inverse stage-one factor `(I + G_0 V)^{-1}`.
    pub fn inverse_factor_entry(&self, j: i32, l: i32) -> C64 {
        if j == 0 {
            return if l == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
        }
        let jj = j as f64;
        let denom = 4.0 * jj * jj * self.c * self.c - 1.0;
        let mut z = C64::new(0.0, 0.0);
        if j == l {
            z += C64::new(4.0 * jj * jj * self.c * self.c / denom, 0.0);
        }
        if j + l == 0 {
            z += C64::new(0.0, 2.0 * jj * self.c / denom);
        }
        z
    }

    /// Entry of the weighted transform `G_0 V`: `delta_{j+l} / (2 j c i)`.
    pub fn gamma_v_entry(&self, j: i32, l: i32) -> C64 {
        if j != 0 && j + l == 0 {
            C64::new(0.0, -1.0 / (2.0 * (j as f64) * self.c))
        } else {
            C64::new(0.0, 0.0)
        }
    }

    /// Entry of the diagonal projection `J_0 V`: `1/c` at the origin.
    pub fn diagonal_projection_entry(&self, j: i32, l: i32) -> C64 {
        if j == 0 && l == 0 {
            C64::new(1.0 / self.c, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }

    /// Entry of `V (G_0 V)`: `i delta_{jl} / (2 j c^2)`.
    pub fn v_gamma_v_entry(&self, j: i32, l: i32) -> C64 {
        if j == l && j != 0 {
            C64::new(0.0, 1.0 / (2.0 * (j as f64) * self.c * self.c))
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

/// Builds the closed-form reference, checking that the contraction
/// certificate of the fixed-point stage holds at `m = k = 0` for this `c`
/// and window.
pub fn closed_form_example(c: f64, window: TruncationWindow) -> Result<ClosedFormReference> {
    if window.dim() != 1 {
        return Err(Error::InvalidParameter(
            "the closed-form example lives on a scalar fiber".into(),
        ));
    }
    if !(c >= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "the closed-form example needs c >= 1, got {c}"
        )));
    }
    let reference = ClosedFormReference {
        c,
        window,
        contraction_certificate: 0.0,
    };
    // Assemble the closed-form stage-one output and evaluate the stage-two
    // certificate on it. Norm code is shared with the similarity module;
    // the matrix entries are not.
    let mut v_tilde = crate::blockspace::BlockMatrix::new(window);
    for j in window.modes() {
        for l in window.modes() {
            let z = reference.v_tilde_entry(j, l);
            if z.norm() > 0.0 {
                v_tilde
                    .set_block(j, l, CMatrix::scalar(z))
                    .expect("index in window");
            }
        }
    }
    let weights = crate::similarity::DecayWeights::of(&v_tilde)?;
    let certificate =
        4.0 * weights.gamma_bound(1) * crate::similarity::weighted_norm(&v_tilde, &weights);
    if certificate >= 1.0 {
        return Err(Error::NoAdmissibleK {
            max_tried: 0,
            certificate,
        });
    }
    Ok(ClosedFormReference {
        contraction_certificate: certificate,
        ..reference
    })
}
