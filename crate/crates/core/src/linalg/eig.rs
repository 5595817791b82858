//! Eigenvalues of a dense complex matrix: Householder reduction to upper
//! Hessenberg form followed by the shifted QR iteration with deflation.
//! Eigenvalues only -- no Schur vectors are accumulated.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::C64;

use super::CMatrix;

/// Eigenvalues of the 2x2 matrix [[a, b], [c, d]], largest-|trace share|
/// root computed first to avoid cancellation.
pub fn eigenvalues_2x2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let t = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (t * t - det).sqrt();
    // Pick the sign that grows |t + disc|.
    let l1 = if (t + disc).norm() >= (t - disc).norm() {
        t + disc
    } else {
        t - disc
    };
    if l1.norm() == 0.0 {
        return (l1, t * 2.0 - l1);
    }
    // Second root via the determinant for accuracy.
    (l1, det / l1)
}

pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    assert!(a.is_square(), "eigenvalues need a square matrix");
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    qr_eigenvalues(&mut h)
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(h: &mut CMatrix) {
    let n = h.nrows();
    for col in 0..n.saturating_sub(2) {
        // Build the reflector for rows col+1..n of this column.
        let mut norm2 = 0.0_f64;
        for i in col + 1..n {
            norm2 += h[(i, col)].norm_sqr();
        }
        let x0 = h[(col + 1, col)];
        let alpha = fmath::sqrt(norm2);
        if alpha <= f64::EPSILON * h.frobenius_norm() {
            continue;
        }
        // v = x + sign(x0) * alpha * e1, sign chosen to avoid cancellation
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut v = vec![C64::new(0.0, 0.0); n];
        for i in col + 1..n {
            v[i] = h[(i, col)];
        }
        v[col + 1] += phase * alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // H <- (I - beta v v*) H
        for j in col..n {
            let mut dot = C64::new(0.0, 0.0);
            for i in col + 1..n {
                dot += v[i].conj() * h[(i, j)];
            }
            dot *= beta;
            for i in col + 1..n {
                let vi = v[i];
                h[(i, j)] -= vi * dot;
            }
        }
        // H <- H (I - beta v v*)
        for i in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for j in col + 1..n {
                dot += h[(i, j)] * v[j];
            }
            dot *= beta;
            for j in col + 1..n {
                let vj = v[j].conj();
                h[(i, j)] -= dot * vj;
            }
        }
        // Clean the annihilated part of the column.
        for i in col + 2..n {
            h[(i, col)] = C64::new(0.0, 0.0);
        }
    }
}

/// Complex Givens rotation: returns (c, s, r) with c real such that
/// [c s; -conj(s) c] * [f; g] = [r; 0] and c^2 + |s|^2 = 1.
fn givens(f: C64, g: C64) -> (f64, C64, C64) {
    if g.re == 0.0 && g.im == 0.0 {
        return (1.0, C64::new(0.0, 0.0), f);
    }
    if f.re == 0.0 && f.im == 0.0 {
        let gn = g.norm();
        return (0.0, g.conj() / gn, C64::new(gn, 0.0));
    }
    let fn_ = f.norm();
    let d = fmath::hypot(fn_, g.norm());
    let c = fn_ / d;
    let fs = f / fn_;
    let s = fs * g.conj() / d;
    (c, s, fs * d)
}

fn qr_eigenvalues(h: &mut CMatrix) -> Result<Vec<C64>> {
    let n = h.nrows();
    let mut evs = vec![C64::new(0.0, 0.0); n];
    let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut hi = n;
    let mut stalled = 0usize;
    let mut total = 0usize;
    let max_total = 40 * n + 100;
    while hi > 0 {
        // Deflate: find the start of the trailing irreducible block.
        let mut lo = hi - 1;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let local = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let local = if local == 0.0 { scale } else { local };
            if sub <= f64::EPSILON * local {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            evs[lo] = h[(lo, lo)];
            hi -= 1;
            stalled = 0;
            continue;
        }
        if lo == hi - 2 {
            let (l1, l2) = eigenvalues_2x2(
                h[(lo, lo)],
                h[(lo, lo + 1)],
                h[(lo + 1, lo)],
                h[(lo + 1, lo + 1)],
            );
            evs[lo] = l1;
            evs[lo + 1] = l2;
            hi -= 2;
            stalled = 0;
            continue;
        }
        total += 1;
        stalled += 1;
        if total > max_total {
            return Err(Error::EigenFailure { size: n });
        }
        // Wilkinson shift from the trailing 2x2, with an occasional
        // exceptional shift to break symmetry-induced stalls.
        let sigma = if stalled % 12 == 0 {
            // hi - lo >= 3 here, so hi - 3 >= lo.
            let extra = h[(hi - 1, hi - 2)].norm() + h[(hi - 2, hi - 3)].norm();
            h[(hi - 1, hi - 1)] + C64::new(0.75 * extra, 0.0)
        } else {
            let (l1, l2) = eigenvalues_2x2(
                h[(hi - 2, hi - 2)],
                h[(hi - 2, hi - 1)],
                h[(hi - 1, hi - 2)],
                h[(hi - 1, hi - 1)],
            );
            let d = h[(hi - 1, hi - 1)];
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };
        qr_step(h, lo, hi, sigma);
    }
    Ok(evs)
}

/// One explicit single-shift QR sweep on the active block [lo, hi).
fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, sigma: C64) {
    for i in lo..hi {
        h[(i, i)] -= sigma;
    }
    let mut rots: Vec<(f64, C64)> = Vec::with_capacity(hi - lo);
    // QR: annihilate the subdiagonal with Givens rotations (rows i, i+1).
    for i in lo..hi - 1 {
        let (c, s, r) = givens(h[(i, i)], h[(i + 1, i)]);
        h[(i, i)] = r;
        h[(i + 1, i)] = C64::new(0.0, 0.0);
        for j in i + 1..hi {
            let a = h[(i, j)];
            let b = h[(i + 1, j)];
            h[(i, j)] = c * a + s * b;
            h[(i + 1, j)] = -s.conj() * a + c * b;
        }
        rots.push((c, s));
    }
    // RQ: apply the adjoint rotations from the right (columns i, i+1).
    for (idx, (c, s)) in rots.iter().enumerate() {
        let i = lo + idx;
        for r in lo..(i + 2).min(hi) {
            let a = h[(r, i)];
            let b = h[(r, i + 1)];
            h[(r, i)] = *c * a + s.conj() * b;
            h[(r, i + 1)] = -*s * a + *c * b;
        }
    }
    for i in lo..hi {
        h[(i, i)] += sigma;
    }
}
