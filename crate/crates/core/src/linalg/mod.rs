//! Small dense complex linear algebra: just enough for d x d blocks and the
//! flattened window matrices (a few hundred rows at most). Row-major storage,
//! partial-pivot LU, a Hermitian Jacobi sweep for spectral norms, a shifted
//! QR eigensolver and a scaling-and-squaring exponential.

mod eig;
mod expm;

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fmath;
use crate::C64;

/// Dense complex matrix, row major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl core::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.nrows, self.ncols)?;
        for i in 0..self.nrows {
            write!(f, "  ")?;
            for j in 0..self.ncols {
                write!(f, "{:.4e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl core::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.ncols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.ncols + j]
    }
}

impl CMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![C64::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn scalar(z: C64) -> Self {
        Self {
            nrows: 1,
            ncols: 1,
            data: vec![z],
        }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        Self::from_fn(nrows, ncols, |i, j| rows[i][j])
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.ncols, rhs.nrows, "inner dimensions must agree");
        let mut out = CMatrix::zeros(self.nrows, rhs.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..rhs.ncols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.ncols, x.len());
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        for i in 0..self.nrows {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.ncols {
                acc += self[(i, j)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn add(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, z: C64) -> CMatrix {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= z;
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        fmath::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut best = 0.0_f64;
        for j in 0..self.ncols {
            let s: f64 = (0..self.nrows).map(|i| self[(i, j)].norm()).sum();
            if s > best {
                best = s;
            }
        }
        best
    }

    /// Operator 2-norm, i.e. the largest singular value, computed as the
    /// square root of the top eigenvalue of `A* A` by cyclic Jacobi sweeps.
    pub fn spectral_norm(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        if self.nrows == 1 && self.ncols == 1 {
            return self.data[0].norm();
        }
        // Work with the smaller Gram matrix of the two.
        let g = if self.nrows >= self.ncols {
            self.adjoint().mul(self)
        } else {
            self.mul(&self.adjoint())
        };
        let lam = hermitian_max_eigenvalue(g);
        fmath::sqrt(lam.max(0.0))
    }

    /// Solves `self * X = B` by partial-pivot LU. `self` must be square.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        assert!(self.is_square(), "solve needs a square matrix");
        assert_eq!(self.nrows, b.nrows, "right-hand side height mismatch");
        let n = self.nrows;
        let mut lu = self.clone();
        let mut x = b.clone();
        let mut max_pivot = 0.0_f64;
        let scale = self.frobenius_norm().max(1.0);
        for col in 0..n {
            let mut p = col;
            let mut best = lu[(col, col)].norm();
            for r in col + 1..n {
                let v = lu[(r, col)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best > max_pivot {
                max_pivot = best;
            }
            if best <= f64::EPSILON * scale * 16.0 {
                let cond = if best > 0.0 {
                    max_pivot / best
                } else {
                    f64::INFINITY
                };
                return Err(Error::SingularMatrix {
                    condition_estimate: cond,
                });
            }
            if p != col {
                for j in 0..n {
                    lu.data.swap(col * n + j, p * n + j);
                }
                for j in 0..x.ncols {
                    x.data.swap(col * x.ncols + j, p * x.ncols + j);
                }
            }
            let piv = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / piv;
                lu[(r, col)] = factor;
                if factor.re == 0.0 && factor.im == 0.0 {
                    continue;
                }
                for j in col + 1..n {
                    let v = lu[(col, j)];
                    lu[(r, j)] -= factor * v;
                }
                for j in 0..x.ncols {
                    let v = x[(col, j)];
                    x[(r, j)] -= factor * v;
                }
            }
        }
        // Back substitution.
        for col in (0..n).rev() {
            let piv = lu[(col, col)];
            for j in 0..x.ncols {
                x[(col, j)] /= piv;
            }
            for r in 0..col {
                let factor = lu[(r, col)];
                if factor.re == 0.0 && factor.im == 0.0 {
                    continue;
                }
                for j in 0..x.ncols {
                    let v = x[(col, j)];
                    x[(r, j)] -= factor * v;
                }
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.solve(&CMatrix::identity(self.nrows))
    }

    /// Eigenvalues with multiplicity, in no particular order.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        eig::eigenvalues(self)
    }

    /// Matrix exponential by Pade approximation with scaling and squaring.
    pub fn expm(&self) -> Result<CMatrix> {
        expm::expm(self)
    }
}

/// Largest eigenvalue of a Hermitian matrix by cyclic Jacobi rotations.
/// The input is consumed as workspace.
fn hermitian_max_eigenvalue(mut h: CMatrix) -> f64 {
    let n = h.nrows();
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return h[(0, 0)].re;
    }
    if n == 2 {
        let a = h[(0, 0)].re;
        let c = h[(1, 1)].re;
        let b = h[(0, 1)].norm();
        let mid = 0.5 * (a + c);
        return mid + fmath::hypot(0.5 * (a - c), b);
    }
    let scale = h.frobenius_norm();
    if scale == 0.0 {
        return 0.0;
    }
    let tol = f64::EPSILON * scale;
    for _sweep in 0..60 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in p + 1..n {
                off += h[(p, q)].norm_sqr();
            }
        }
        if fmath::sqrt(2.0 * off) <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let hpq = h[(p, q)];
                let apq = hpq.norm();
                if apq <= tol / (n as f64) {
                    continue;
                }
                // Unitary 2x2 rotation annihilating the (p, q) entry; the
                // tangent formula keeps |theta| <= pi/4.
                let phase = hpq / apq;
                let tau = (h[(p, p)].re - h[(q, q)].re) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + fmath::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + fmath::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / fmath::sqrt(1.0 + t * t);
                let s = c * t;
                let sp = phase.conj() * s;
                for j in 0..n {
                    let hpj = h[(p, j)];
                    let hqj = h[(q, j)];
                    h[(p, j)] = c * hpj + sp.conj() * hqj;
                    h[(q, j)] = -sp * hpj + c * hqj;
                }
                for i in 0..n {
                    let hip = h[(i, p)];
                    let hiq = h[(i, q)];
                    h[(i, p)] = c * hip + sp * hiq;
                    h[(i, q)] = -sp.conj() * hip + c * hiq;
                }
                h[(p, q)] = C64::new(0.0, 0.0);
                h[(q, p)] = C64::new(0.0, 0.0);
            }
        }
    }
    let mut best = h[(0, 0)].re;
    for i in 1..n {
        if h[(i, i)].re > best {
            best = h[(i, i)].re;
        }
    }
    best
}

/// Convenience constructor for complex scalars.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn solve_recovers_identity() {
        let a = CMatrix::from_fn(4, 4, |i, j| {
            c64(
                ((i * 7 + j * 3) % 5) as f64 + if i == j { 6.0 } else { 0.0 },
                ((i + 2 * j) % 3) as f64,
            )
        });
        let inv = a.inverse().unwrap();
        let prod = a.mul(&inv);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { c64(1.0, 0.0) } else { c64(0.0, 0.0) };
                assert!(close(prod[(i, j)], want, 1e-12), "{:?}", prod);
            }
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 0)] = c64(1.0, 0.0);
        a[(1, 1)] = c64(1.0, 0.0);
        // third row/column zero
        assert!(matches!(
            a.inverse(),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn spectral_norm_examples() {
        // 1x1: modulus
        assert!((CMatrix::scalar(c64(3.0, 4.0)).spectral_norm() - 5.0).abs() < 1e-14);
        // rank-one 2x2: norm = |u||v|
        let m = CMatrix::from_rows(&[
            vec![c64(2.0, 0.0), c64(0.0, 2.0)],
            vec![c64(0.0, -2.0), c64(2.0, 0.0)],
        ]);
        // eigen/singular values of this normal matrix are 4 and 0
        assert!((m.spectral_norm() - 4.0).abs() < 1e-12);
        // diagonal rectangular
        let mut r = CMatrix::zeros(2, 3);
        r[(0, 0)] = c64(0.0, -7.0);
        r[(1, 2)] = c64(1.0, 0.0);
        assert!((r.spectral_norm() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        // deterministic pseudo-random 5x5
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let a = CMatrix::from_fn(5, 5, |_, _| c64(next(), next()));
        let jac = a.spectral_norm();
        // power iteration on A* A
        let g = a.adjoint().mul(&a);
        let mut v = vec![c64(1.0, 0.0); 5];
        let mut lam = 0.0;
        for _ in 0..2000 {
            let w = g.matvec(&v);
            let nrm = fmath::sqrt(w.iter().map(|z| z.norm_sqr()).sum());
            v = w.iter().map(|z| z / nrm).collect();
            lam = nrm;
        }
        assert!((jac - fmath::sqrt(lam)).abs() < 1e-9, "{jac} vs {}", fmath::sqrt(lam));
    }
}
