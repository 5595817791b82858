//! Matrix exponential by diagonal Pade approximation with scaling and
//! squaring, following Higham's 2005 parameter choices. The blocks this
//! crate exponentiates are small, so robustness wins over cleverness:
//! the order is picked from the exact 1-norm, no norm estimation tricks.

use crate::error::Result;
use crate::fmath;
use crate::C64;

use super::CMatrix;

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.53939833006323e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    if n == 1 {
        return Ok(CMatrix::scalar(a[(0, 0)].exp()));
    }
    let norm = a.one_norm();
    let a2 = a.mul(a);
    if norm <= THETA_3 {
        let (u, v) = low_order_sums(a, &a2, &B3);
        return pade_solve_parts(&u, &v);
    }
    let a4 = a2.mul(&a2);
    if norm <= THETA_5 {
        let (u, v) = low_order_sums(a, &a2, &B5);
        return pade_solve_parts(&u, &v);
    }
    let a6 = a4.mul(&a2);
    if norm <= THETA_7 {
        let (u, v) = low_order_sums(a, &a2, &B7);
        return pade_solve_parts(&u, &v);
    }
    if norm <= THETA_9 {
        let (u, v) = low_order_sums(a, &a2, &B9);
        return pade_solve_parts(&u, &v);
    }
    // Pade 13 with scaling and squaring.
    let s = fmath::ceil(fmath::log2(norm / THETA_13)).max(0.0) as i32;
    let scale = C64::new(1.0 / fmath::powi(2.0, s), 0.0);
    let a1 = a.scale(scale);
    let a2 = a2.scale(scale * scale);
    let a4 = a4.scale(scale * scale * scale * scale);
    let a6 = a6.scale(scale * scale * scale * scale * scale * scale);
    let mut r = pade13(&a1, &a2, &a4, &a6)?;
    for _ in 0..s {
        r = r.mul(&r);
    }
    Ok(r)
}

/// (u, v) with u odd and v even Pade sums, for orders up to 9.
fn low_order_sums(a: &CMatrix, a2: &CMatrix, b: &[f64]) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    // powers a2^k, k = 0..=(m-1)/2
    let half = (b.len() - 2) / 2;
    let mut pow = CMatrix::identity(n);
    let mut u = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for k in 0..=half {
        u = u.add(&pow.scale(C64::new(b[2 * k + 1], 0.0)));
        v = v.add(&pow.scale(C64::new(b[2 * k], 0.0)));
        if k < half {
            pow = pow.mul(a2);
        }
    }
    (a.mul(&u), v)
}

fn pade13(a: &CMatrix, a2: &CMatrix, a4: &CMatrix, a6: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let id = CMatrix::identity(n);
    let b = &B13;
    let w1 = a6
        .scale(C64::new(b[13], 0.0))
        .add(&a4.scale(C64::new(b[11], 0.0)))
        .add(&a2.scale(C64::new(b[9], 0.0)));
    let w2 = a6
        .scale(C64::new(b[7], 0.0))
        .add(&a4.scale(C64::new(b[5], 0.0)))
        .add(&a2.scale(C64::new(b[3], 0.0)))
        .add(&id.scale(C64::new(b[1], 0.0)));
    let u = a.mul(&a6.mul(&w1).add(&w2));
    let z1 = a6
        .scale(C64::new(b[12], 0.0))
        .add(&a4.scale(C64::new(b[10], 0.0)))
        .add(&a2.scale(C64::new(b[8], 0.0)));
    let v = a6
        .mul(&z1)
        .add(&a6.scale(C64::new(b[6], 0.0)))
        .add(&a4.scale(C64::new(b[4], 0.0)))
        .add(&a2.scale(C64::new(b[2], 0.0)))
        .add(&id.scale(C64::new(b[0], 0.0)));
    pade_solve_parts(&u, &v)
}

/// Solves (v - u) x = (v + u).
fn pade_solve_parts(u: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    v.sub(u).solve(&v.add(u))
}
