use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("dimension must be even, got {0}")]
    OddDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid number of principal components m1={m1} for dimension m={m}")]
    InvalidM1 { m1: usize, m: usize },

    #[error("a budget set requires gamma")]
    MissingGamma,

    #[error("gamma={gamma} outside [0, {m}]")]
    InvalidGamma { gamma: f64, m: usize },

    #[error("vertex enumeration would produce 2^{0} points")]
    TooManyVertices(usize),

    #[error("brute force over {0} items is too large")]
    TooLarge(usize),

    #[error("the uncertainty set is empty")]
    EmptySet,

    #[error("simplex stopped after {0} pivots")]
    IterationLimit(usize),

    #[error("branch and bound stopped at a limit (incumbent {incumbent:?}, bound {bound})")]
    LimitReached {
        incumbent: Option<f64>,
        bound: f64,
        values: Option<Vec<f64>>,
    },

    #[error("the formulation is infeasible")]
    Infeasible,

    #[error("the formulation is unbounded")]
    Unbounded,

    #[error("this operation requires m = 1, got m = {0}")]
    MRequiredOne(usize),

    #[error("{family} sets are not supported by {operation}")]
    Unsupported {
        family: &'static str,
        operation: &'static str,
    },

    #[error("certificate check failed: {0}")]
    Certificate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the optimization engine rather than of the input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::IterationLimit(_)
                | Error::LimitReached { .. }
                | Error::Infeasible
                | Error::Unbounded
                | Error::Certificate(_)
        )
    }
}
