//! Finite block-matrix algebra over the Fourier window.
//!
//! Operators on `L^2([0, omega], C^d)` are represented through the spectral
//! resolution of `L0 = d/ds`: a table of `d x d` blocks indexed by mode
//! pairs `(j, l)` with `|j|, |l| <= N`. Blocks are stored sparsely (absent
//! entry = zero block); the potential is a Hankel band and the weighted
//! transforms never create fill-in, so structured operators stay `O(N)`.
//! Dense conversion happens only at the inverse and eigensolver boundaries.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg::CMatrix;
use crate::C64;

/// Fourier truncation window: period `omega`, fiber dimension `d`, and the
/// half-width `N` of the retained mode range `[-N, N]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWindow {
    omega: f64,
    dim: usize,
    half_width: i32,
}

impl TruncationWindow {
    pub fn new(omega: f64, dim: usize, half_width: i32) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "omega must be positive and finite, got {omega}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("fiber dimension must be >= 1".into()));
        }
        if half_width < 1 {
            return Err(Error::InvalidParameter(format!(
                "half width must be >= 1, got {half_width}"
            )));
        }
        Ok(Self {
            omega,
            dim,
            half_width,
        })
    }

    #[inline]
    pub fn omega(&self) -> f64 {
        self.omega
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn half_width(&self) -> i32 {
        self.half_width
    }

    /// Eigenvalue of `L0 = d/ds` at mode `l`: `i 2 pi l / omega`.
    #[inline]
    pub fn eigenvalue(&self, l: i32) -> C64 {
        C64::new(0.0, 2.0 * core::f64::consts::PI * (l as f64) / self.omega)
    }

    /// Iterator over the window modes `-N..=N`.
    pub fn modes(&self) -> impl Iterator<Item = i32> {
        -self.half_width..=self.half_width
    }

    #[inline]
    pub fn contains(&self, l: i32) -> bool {
        l.abs() <= self.half_width
    }

    /// Number of modes in the window, `2N + 1`.
    #[inline]
    pub fn mode_count(&self) -> usize {
        (2 * self.half_width + 1) as usize
    }

    /// Dimension of the flattened window space, `(2N + 1) d`.
    #[inline]
    pub fn flat_dim(&self) -> usize {
        self.mode_count() * self.dim
    }

    /// Row offset of mode `l` in the flattened space.
    #[inline]
    pub fn offset(&self, l: i32) -> usize {
        ((l + self.half_width) as usize) * self.dim
    }

    fn check_same(&self, other: &TruncationWindow) -> Result<()> {
        if self != other {
            return Err(Error::WindowMismatch(format!(
                "{:?} vs {:?}",
                self, other
            )));
        }
        Ok(())
    }
}

/// Resolution of the identity over the window: one merged central cell
/// `{-m..m}` plus singleton cells for `m < |l| <= N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    window: TruncationWindow,
    central_radius: i32,
}

impl Resolution {
    pub fn new(window: TruncationWindow, central_radius: i32) -> Result<Self> {
        if central_radius < 0 || central_radius > window.half_width() {
            return Err(Error::InvalidParameter(format!(
                "central radius {central_radius} outside [0, {}]",
                window.half_width()
            )));
        }
        Ok(Self {
            window,
            central_radius,
        })
    }

    /// Finest resolution: every mode is its own cell.
    pub fn fine(window: TruncationWindow) -> Self {
        Self {
            window,
            central_radius: 0,
        }
    }

    #[inline]
    pub fn window(&self) -> &TruncationWindow {
        &self.window
    }

    #[inline]
    pub fn central_radius(&self) -> i32 {
        self.central_radius
    }

    /// Cells as mode lists: the central cell first, then singletons.
    pub fn cells(&self) -> Vec<Vec<i32>> {
        let m = self.central_radius;
        let n = self.window.half_width();
        let mut cells = Vec::with_capacity((2 * (n - m) + 1) as usize);
        cells.push((-m..=m).collect());
        for l in -n..=n {
            if l.abs() > m {
                cells.push(vec![l]);
            }
        }
        cells
    }
}

/// Table of `d x d` complex blocks over the window; the finite stand-in for
/// operators in the blockwise Hilbert-Schmidt class.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    window: TruncationWindow,
    blocks: BTreeMap<(i32, i32), CMatrix>,
}

impl BlockMatrix {
    pub fn new(window: TruncationWindow) -> Self {
        Self {
            window,
            blocks: BTreeMap::new(),
        }
    }

    pub fn identity(window: TruncationWindow) -> Self {
        let mut m = Self::new(window);
        for l in window.modes() {
            m.blocks.insert((l, l), CMatrix::identity(window.dim()));
        }
        m
    }

    /// Diagonal matrix of `L0` eigenvalues, `lambda_l I_d` at `(l, l)`.
    pub fn mode_diagonal(window: TruncationWindow) -> Self {
        let mut m = Self::new(window);
        for l in window.modes() {
            m.blocks.insert(
                (l, l),
                CMatrix::identity(window.dim()).scale(window.eigenvalue(l)),
            );
        }
        m
    }

    #[inline]
    pub fn window(&self) -> &TruncationWindow {
        &self.window
    }

    pub fn set_block(&mut self, j: i32, l: i32, block: CMatrix) -> Result<()> {
        if !self.window.contains(j) || !self.window.contains(l) {
            return Err(Error::InvalidParameter(format!(
                "block index ({j}, {l}) outside window of half width {}",
                self.window.half_width()
            )));
        }
        let d = self.window.dim();
        if block.nrows() != d || block.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "block at ({j}, {l}) is {}x{}, expected {d}x{d}",
                block.nrows(),
                block.ncols()
            )));
        }
        if block.is_zero() {
            self.blocks.remove(&(j, l));
        } else {
            self.blocks.insert((j, l), block);
        }
        Ok(())
    }

    pub fn block(&self, j: i32, l: i32) -> Option<&CMatrix> {
        self.blocks.get(&(j, l))
    }

    /// Block at `(j, l)`, materializing zero for absent entries.
    pub fn block_or_zero(&self, j: i32, l: i32) -> CMatrix {
        self.blocks
            .get(&(j, l))
            .cloned()
            .unwrap_or_else(|| CMatrix::zeros(self.window.dim(), self.window.dim()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(i32, i32), &CMatrix)> {
        self.blocks.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn map_blocks(&self, mut f: impl FnMut(i32, i32, &CMatrix) -> Option<CMatrix>) -> Self {
        let mut out = Self::new(self.window);
        for (&(j, l), b) in &self.blocks {
            if let Some(nb) = f(j, l, b) {
                if !nb.is_zero() {
                    out.blocks.insert((j, l), nb);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &BlockMatrix) -> Result<BlockMatrix> {
        self.window.check_same(&rhs.window)?;
        let mut out = self.clone();
        for (&(j, l), b) in &rhs.blocks {
            match out.blocks.get_mut(&(j, l)) {
                Some(a) => {
                    let s = a.add(b);
                    if s.is_zero() {
                        out.blocks.remove(&(j, l));
                    } else {
                        *a = s;
                    }
                }
                None => {
                    out.blocks.insert((j, l), b.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &BlockMatrix) -> Result<BlockMatrix> {
        self.add(&rhs.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: C64) -> BlockMatrix {
        if z.re == 0.0 && z.im == 0.0 {
            return BlockMatrix::new(self.window);
        }
        self.map_blocks(|_, _, b| Some(b.scale(z)))
    }

    pub fn mul(&self, rhs: &BlockMatrix) -> Result<BlockMatrix> {
        self.window.check_same(&rhs.window)?;
        // Group the right factor by row index once.
        let mut rows: BTreeMap<i32, Vec<(i32, &CMatrix)>> = BTreeMap::new();
        for (&(n, l), b) in &rhs.blocks {
            rows.entry(n).or_default().push((l, b));
        }
        let mut acc: BTreeMap<(i32, i32), CMatrix> = BTreeMap::new();
        for (&(j, n), a) in &self.blocks {
            if let Some(row) = rows.get(&n) {
                for &(l, b) in row {
                    let prod = a.mul(b);
                    match acc.get_mut(&(j, l)) {
                        Some(c) => *c = c.add(&prod),
                        None => {
                            acc.insert((j, l), prod);
                        }
                    }
                }
            }
        }
        acc.retain(|_, b| !b.is_zero());
        Ok(BlockMatrix {
            window: self.window,
            blocks: acc,
        })
    }

    /// Applies the operator to a flat coefficient vector of length `(2N+1)d`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.window.flat_dim());
        let d = self.window.dim();
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        for (&(j, l), b) in &self.blocks {
            let ro = self.window.offset(j);
            let co = self.window.offset(l);
            for r in 0..d {
                let mut accum = C64::new(0.0, 0.0);
                for c in 0..d {
                    accum += b[(r, c)] * x[co + c];
                }
                y[ro + r] += accum;
            }
        }
        y
    }

    /// Blockwise Hilbert-Schmidt norm with respect to a resolution: the
    /// square root of the sum of squared spectral norms of the cell-pair
    /// submatrices.
    pub fn hs_norm(&self, resolution: &Resolution) -> Result<f64> {
        self.window.check_same(resolution.window())?;
        let m = resolution.central_radius();
        let d = self.window.dim();
        let mut total = 0.0_f64;
        // Singleton-cell pairs read straight off the stored blocks; pairs
        // touching the merged central cell are collected separately.
        let central: Vec<i32> = (-m..=m).collect();
        let mut row_central: BTreeMap<i32, Vec<(i32, &CMatrix)>> = BTreeMap::new();
        let mut col_central: BTreeMap<i32, Vec<(i32, &CMatrix)>> = BTreeMap::new();
        let mut core_blocks: Vec<(i32, i32, &CMatrix)> = Vec::new();
        for (&(j, l), b) in &self.blocks {
            let jc = j.abs() <= m;
            let lc = l.abs() <= m;
            match (jc, lc) {
                (false, false) => {
                    let n = b.spectral_norm();
                    total += n * n;
                }
                (false, true) => row_central.entry(j).or_default().push((l, b)),
                (true, false) => col_central.entry(l).or_default().push((j, b)),
                (true, true) => core_blocks.push((j, l, b)),
            }
        }
        // P_j X P_(m): one row of modes against the central cell.
        for (_, entries) in row_central {
            let mut sub = CMatrix::zeros(d, central.len() * d);
            for (l, b) in entries {
                let co = ((l + m) as usize) * d;
                for r in 0..d {
                    for c in 0..d {
                        sub[(r, co + c)] = b[(r, c)];
                    }
                }
            }
            let n = sub.spectral_norm();
            total += n * n;
        }
        // P_(m) X P_l.
        for (_, entries) in col_central {
            let mut sub = CMatrix::zeros(central.len() * d, d);
            for (j, b) in entries {
                let ro = ((j + m) as usize) * d;
                for r in 0..d {
                    for c in 0..d {
                        sub[(ro + r, c)] = b[(r, c)];
                    }
                }
            }
            let n = sub.spectral_norm();
            total += n * n;
        }
        // P_(m) X P_(m).
        if !core_blocks.is_empty() {
            let side = central.len() * d;
            let mut sub = CMatrix::zeros(side, side);
            for (j, l, b) in core_blocks {
                let ro = ((j + m) as usize) * d;
                let co = ((l + m) as usize) * d;
                for r in 0..d {
                    for c in 0..d {
                        sub[(ro + r, co + c)] = b[(r, c)];
                    }
                }
            }
            let n = sub.spectral_norm();
            total += n * n;
        }
        Ok(fmath::sqrt(total))
    }

    /// Hilbert-Schmidt norm in the finest resolution (singleton cells).
    pub fn hs_norm_fine(&self) -> f64 {
        let mut total = 0.0_f64;
        for b in self.blocks.values() {
            let n = b.spectral_norm();
            total += n * n;
        }
        fmath::sqrt(total)
    }

    /// Upper bound for the operator norm: the blockwise HS norm dominates it.
    pub fn operator_norm_bound(&self, resolution: &Resolution) -> Result<f64> {
        self.hs_norm(resolution)
    }

    /// Frobenius norm of the row slice `P_l X` over the window.
    pub fn row_frobenius(&self, l: i32) -> f64 {
        let mut total = 0.0_f64;
        for (&(j, _), b) in &self.blocks {
            if j == l {
                let n = b.frobenius_norm();
                total += n * n;
            }
        }
        fmath::sqrt(total)
    }

    /// Squared-spectral-norm sums per row and per column, used by the decay
    /// weights; index 0 corresponds to mode `-N`.
    pub fn row_col_norms_sq(&self) -> (Vec<f64>, Vec<f64>) {
        let count = self.window.mode_count();
        let n = self.window.half_width();
        let mut rows = vec![0.0_f64; count];
        let mut cols = vec![0.0_f64; count];
        for (&(j, l), b) in &self.blocks {
            let s = b.spectral_norm();
            rows[(j + n) as usize] += s * s;
            cols[(l + n) as usize] += s * s;
        }
        (rows, cols)
    }

    /// Zeroes every block with `max(|j|, |l|) > N - margin`.
    pub fn interior(&self, margin: i32) -> BlockMatrix {
        let cut = self.window.half_width() - margin.max(0);
        self.map_blocks(|j, l, b| {
            if j.abs() <= cut && l.abs() <= cut {
                Some(b.clone())
            } else {
                None
            }
        })
    }

    pub fn to_dense(&self) -> CMatrix {
        let d = self.window.dim();
        let mut dense = CMatrix::zeros(self.window.flat_dim(), self.window.flat_dim());
        for (&(j, l), b) in &self.blocks {
            let ro = self.window.offset(j);
            let co = self.window.offset(l);
            for r in 0..d {
                for c in 0..d {
                    dense[(ro + r, co + c)] = b[(r, c)];
                }
            }
        }
        dense
    }

    pub fn from_dense(window: TruncationWindow, dense: &CMatrix) -> Self {
        assert_eq!(dense.nrows(), window.flat_dim());
        assert_eq!(dense.ncols(), window.flat_dim());
        let d = window.dim();
        let mut out = Self::new(window);
        for j in window.modes() {
            for l in window.modes() {
                let ro = window.offset(j);
                let co = window.offset(l);
                let b = CMatrix::from_fn(d, d, |r, c| dense[(ro + r, co + c)]);
                if !b.is_zero() {
                    out.blocks.insert((j, l), b);
                }
            }
        }
        out
    }

    /// Given `W`, computes `W'` with `(I + W)(I + W') = I` by a dense LU
    /// solve. Singular-to-tolerance inputs are reported with the pivot-ratio
    /// condition estimate.
    pub fn invert_i_plus(&self) -> Result<BlockMatrix> {
        if self.is_zero() {
            return Ok(BlockMatrix::new(self.window));
        }
        let n = self.window.flat_dim();
        let mut dense = self.to_dense();
        for i in 0..n {
            dense[(i, i)] += C64::new(1.0, 0.0);
        }
        let inv = dense.inverse()?;
        let mut shifted = inv;
        for i in 0..n {
            shifted[(i, i)] -= C64::new(1.0, 0.0);
        }
        Ok(Self::from_dense(self.window, &shifted))
    }
}
