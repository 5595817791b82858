//! Composite Gauss-Legendre quadrature for vector-valued integrands.
//! Order 5 per interval with interval halving until two successive
//! refinements agree; the integrands here (group orbits) are entire in
//! the time variable, so convergence is fast.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::C64;

/// Abscissae of the 5-point Gauss-Legendre rule on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.906179845938664,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.906179845938664,
];

/// Matching weights.
const GL5_WEIGHTS: [f64; 5] = [
    0.23692688505618909,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618909,
];

fn gl5_panels(
    f: &mut impl FnMut(f64) -> Vec<C64>,
    a: f64,
    b: f64,
    panels: usize,
    dim: usize,
) -> Vec<C64> {
    let mut acc = vec![C64::new(0.0, 0.0); dim];
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let left = a + h * p as f64;
        let mid = left + 0.5 * h;
        for (node, weight) in GL5_NODES.iter().zip(&GL5_WEIGHTS) {
            let t = mid + 0.5 * h * node;
            let val = f(t);
            debug_assert_eq!(val.len(), dim);
            let scale = 0.5 * h * weight;
            for (acc_i, v_i) in acc.iter_mut().zip(&val) {
                *acc_i += v_i * scale;
            }
        }
    }
    acc
}

fn l2_diff(a: &[C64], b: &[C64]) -> f64 {
    fmath::sqrt(
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>(),
    )
}

/// Integrates `f` over `[a, b]`, doubling the panel count until two
/// successive composite values differ by at most `tol` in the l2 norm.
pub fn integrate(
    mut f: impl FnMut(f64) -> Vec<C64>,
    a: f64,
    b: f64,
    dim: usize,
    tol: f64,
) -> Result<Vec<C64>> {
    if a == b {
        return Ok(vec![C64::new(0.0, 0.0); dim]);
    }
    let mut panels = 1usize;
    let mut prev = gl5_panels(&mut f, a, b, panels, dim);
    for _ in 0..14 {
        panels *= 2;
        let cur = gl5_panels(&mut f, a, b, panels, dim);
        let diff = l2_diff(&cur, &prev);
        if diff <= tol {
            return Ok(cur);
        }
        prev = cur;
    }
    let cur = gl5_panels(&mut f, a, b, panels * 2, dim);
    let diff = l2_diff(&cur, &prev);
    if diff <= tol {
        Ok(cur)
    } else {
        Err(Error::QuadratureNonConvergence { estimate: diff })
    }
}
