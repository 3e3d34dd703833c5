//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("chain is reducible or not primitive: {0}")]
    NotPrimitive(String),

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("solver did not converge: {0}")]
    Convergence(String),

    #[error("residual {residual:e} above tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("displacement vector is not centered: mean {0:e}")]
    Uncentered(f64),

    #[error("class membership violated: {0}")]
    ClassViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
