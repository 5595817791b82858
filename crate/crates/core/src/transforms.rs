//! The two block transforms at the heart of both similarity stages.
//!
//! For a merge radius `m`, [`diagonal_part`] keeps the central
//! `(2m+1) x (2m+1)` block square plus the diagonal blocks outside it,
//! and [`solve_commutator`] weights the remaining blocks by
//! `1 / (lambda_j - lambda_l)`. Together they give the unique splitting
//! `X = J_m X + (Lambda (G_m X) - (G_m X) Lambda)` used to trade an
//! off-diagonal perturbation for a similarity factor.

use crate::blockspace::BlockMatrix;

/// Keeps the central square `|j|, |l| <= m` and the outer diagonal
/// `j = l, |j| > m`; zeroes everything else. Idempotent.
pub fn diagonal_part(x: &BlockMatrix, m: i32) -> BlockMatrix {
    assert!(
        m >= 0 && m <= x.window().half_width(),
        "merge radius out of range"
    );
    x.map_blocks(|j, l, b| {
        if (j.abs() <= m && l.abs() <= m) || (j == l && j.abs() > m) {
            Some(b.clone())
        } else {
            None
        }
    })
}

/// The weighted off-diagonal transform: block `(j, l)` becomes
/// `X_{jl} / (lambda_j - lambda_l)` when `j != l` and `max(|j|, |l|) > m`,
/// zero otherwise. Acts entrywise on stored blocks, so sparsity is kept.
pub fn solve_commutator(x: &BlockMatrix, m: i32) -> BlockMatrix {
    assert!(
        m >= 0 && m <= x.window().half_width(),
        "merge radius out of range"
    );
    let w = *x.window();
    x.map_blocks(|j, l, b| {
        if j != l && j.abs().max(l.abs()) > m {
            let weight = w.eigenvalue(j) - w.eigenvalue(l);
            Some(b.scale(weight.inv()))
        } else {
            None
        }
    })
}

/// Residual of the commutator identity the weighted transform solves:
/// `|Lambda (G_m X) - (G_m X) Lambda - (X - J_m X)|` in the fine HS norm.
/// Zero to rounding at any finite window.
pub fn commutator_residual(x: &BlockMatrix, m: i32) -> f64 {
    let w = *x.window();
    let gx = solve_commutator(x, m);
    let jx = diagonal_part(x, m);
    // Lambda G - G Lambda acts blockwise as multiplication by
    // (lambda_j - lambda_l).
    let commutator = gx.map_blocks(|j, l, b| Some(b.scale(w.eigenvalue(j) - w.eigenvalue(l))));
    let target = x.sub(&jx).expect("same window");
    commutator
        .sub(&target)
        .expect("same window")
        .hs_norm_fine()
}
