//! Minimum-weight bipartite matching for comparing eigenvalue multisets.
//! Spectra are unordered, so distances between them are taken over an
//! optimal injective assignment of one multiset into the other.

use alloc::vec;
use alloc::vec::Vec;

use crate::C64;

/// Solves the rectangular assignment problem (rows <= cols) by shortest
/// augmenting paths with potentials. Returns, for each row, the matched
/// column. Total cost is minimal.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(
        n <= m,
        "assignment expects at most as many rows as columns"
    );
    // 1-based potentials, matching in `way`/`links` per the classic scheme.
    let mut u = vec![0.0_f64; n + 1];
    let mut v = vec![0.0_f64; m + 1];
    let mut matched_col_row = vec![0usize; m + 1]; // column -> row (1-based)
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        matched_col_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = matched_col_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[matched_col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_col_row[j0] = matched_col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        let i = matched_col_row[j];
        if i > 0 {
            row_to_col[i - 1] = j - 1;
        }
    }
    row_to_col
}

/// Matching statistics between two spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchDistance {
    /// Largest matched pair distance.
    pub max: f64,
    /// Sum of matched pair distances.
    pub total: f64,
}

/// Optimal injective matching of `a` into `b` (requires `a.len() <= b.len()`)
/// under the `|mu - nu|` cost.
pub fn spectrum_distance(a: &[C64], b: &[C64]) -> MatchDistance {
    if a.is_empty() {
        return MatchDistance { max: 0.0, total: 0.0 };
    }
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).collect())
        .collect();
    let assignment = min_cost_assignment(&cost);
    let mut max = 0.0_f64;
    let mut total = 0.0_f64;
    for (i, &j) in assignment.iter().enumerate() {
        let c = cost[i][j];
        total += c;
        if c > max {
            max = c;
        }
    }
    MatchDistance { max, total }
}
