//! Spectral analysis and evolution for the periodic first-order operator
//! `L y = y' - V(s) y(omega - s)` on `L^2([0, omega], C^d)`.
//!
//! The reflection `s -> omega - s` inside the potential term couples the
//! Fourier modes `l` and `-l`, so in the Fourier basis the potential acts
//! as a Hankel block matrix. This crate diagonalizes the truncated operator
//! up to a controlled similarity in two stages:
//!
//! 1. a preliminary transform `I + G_m V` that replaces the raw potential
//!    with a Hilbert-Schmidt one ([`similarity::preliminary_similarity`]),
//! 2. a contraction fixed-point that removes the remaining off-diagonal
//!    coupling ([`similarity::solve_fixed_point`]).
//!
//! The composed transform `U` conjugates `L0 - V` to a block-diagonal
//! operator, which yields the spectrum ([`spectral`]), spectral projections,
//! the generated operator group and mild solutions of the associated mixed
//! problems ([`evolution`]). Everything is validated against an independent
//! dense-truncation oracle ([`oracle`]).
//!
//! All computations happen on a finite Fourier window `|l| <= N` described
//! by a [`TruncationWindow`]; operators are tables of `d x d` complex blocks
//! ([`BlockMatrix`]). The crate is `no_std`-compatible (with `alloc`); the
//! companion CLI crate carries IO, file formats and the command-line driver.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod assignment;
pub mod blockspace;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod oracle;
pub mod potential;
pub mod quadrature;
pub mod similarity;
pub mod spectral;
pub mod transforms;

mod fmath;

pub use blockspace::{BlockMatrix, Resolution, TruncationWindow};
pub use error::Error;
pub use linalg::CMatrix;
pub use potential::{AdmissibilityReport, PotentialSpec};
pub use similarity::{Similarity, SimilarityOptions};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
