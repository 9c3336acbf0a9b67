use alloc::string::String;

/// Errors produced by the monitoring pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data violates an invariant at a specific element.
    #[error("validation failed at index {index}: {reason}")]
    Validation { index: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The local neighborhood of a point cannot support a tangent plane.
    #[error("degenerate neighborhood at point {index}: {reason}")]
    DegenerateNeighborhood { index: usize, reason: String },

    #[error("eigensolver failed to converge: {converged} of {requested} pairs, worst relative residual {residual:.3e}")]
    Solver {
        requested: usize,
        converged: usize,
        residual: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("calibration failed: {0}")]
    Calibration(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
