//! Error type shared by all modules.

use alloc::string::String;

/// Errors surfaced by the similarity pipeline and its supporting algebra.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two operands live on different truncation windows.
    #[error("window mismatch: {0}")]
    WindowMismatch(String),

    /// A block or vector does not conform to the window's fiber dimension.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Invalid window or resolution parameters.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Too few equispaced samples to resolve the stored coefficient band.
    #[error("need at least {needed} samples to resolve the coefficient band, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    /// No merge radius m in [0, N-1] brings the weighted off-diagonal part
    /// of the potential under the requested threshold.
    #[error("no admissible m: |G_m V| = {norm_at_max:.6e} at m = {max_tried} still exceeds theta = {theta}")]
    NoAdmissibleM {
        theta: f64,
        max_tried: i32,
        norm_at_max: f64,
    },

    /// No radius k in [m, N-1] certifies the fixed-point contraction.
    #[error("no admissible k: contraction certificate {certificate:.6e} >= 1 at k = {max_tried}")]
    NoAdmissibleK { max_tried: i32, certificate: f64 },

    /// The fixed-point iteration did not reach the tolerance.
    #[error("fixed point did not converge in {iterations} iterations (last residual {last_residual:.6e})")]
    MaxIterExceeded {
        iterations: usize,
        last_residual: f64,
    },

    /// An iterate left the certified contraction ball.
    #[error("fixed-point iterate {iteration} left the certified ball: distance {distance:.6e} > {radius:.6e}")]
    BallEscape {
        iteration: usize,
        distance: f64,
        radius: f64,
    },

    /// A dense solve met a pivot that is zero to working precision.
    #[error("matrix is singular to working precision (condition estimate {condition_estimate:.3e})")]
    SingularMatrix { condition_estimate: f64 },

    /// The QR eigenvalue iteration stalled.
    #[error("eigenvalue iteration failed to converge (size {size})")]
    EigenFailure { size: usize },

    /// The adaptive quadrature did not stabilize.
    #[error("quadrature did not converge: last refinement changed the value by {estimate:.6e}")]
    QuadratureNonConvergence { estimate: f64 },

    /// An operation that needs a nonzero operator received zero.
    #[error("operator is zero: {0}")]
    ZeroOperator(String),
}

pub type Result<T> = core::result::Result<T, Error>;
