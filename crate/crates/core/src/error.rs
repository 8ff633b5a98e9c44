use thiserror::Error;

/// Errors raised by the library. Verification failures that are part of a
/// report (a negative decrement, a violated bound) are not errors; they are
/// recorded in the report and surfaced by its `passed` flag.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} is outside the domain of {sequence}")]
    OutOfDomain { sequence: &'static str, index: usize },

    #[error("index {index} exceeds the coefficient cap {cap}")]
    IndexTooLarge { index: usize, cap: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coordinate-wise smoothness constants are required")]
    MissingCoordinateData,

    #[error("a known minimizer is required")]
    MissingMinimizer,

    #[error("method {method} needs horizon N >= {min}, got {n}")]
    HorizonTooSmall { method: String, n: usize, min: usize },

    #[error("line search exceeded {max} backtracks at iteration {k}")]
    LineSearch { k: usize, max: usize },

    #[error("h-matrix and three-sequence iterates disagree at k = {k} (deviation {deviation:e})")]
    ReplayMismatch { k: usize, deviation: f64 },

    #[error("row {k} cannot be inverted (pivot {pivot:e})")]
    SingularRow { k: usize, pivot: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown identifier '{0}'")]
    UnknownId(String),

    #[error("{0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
