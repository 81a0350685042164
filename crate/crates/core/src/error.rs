//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Two elements from different algebras were combined.
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Cone data violates a structural assumption (zero generator,
    /// non-SPD ellipsoid matrix, mismatched ambient spaces, ...).
    #[error("invalid cone data: {0}")]
    InvalidCone(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Numerical failure (eigensolver breakdown, vanishing image norm, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A starting point was too far from the feasible set to be adopted.
    #[error("infeasible start: {0}")]
    InfeasibleStart(String),

    /// Armijo backtracking exhausted its budget without sufficient decrease.
    #[error("line search exhausted after {backtracks} backtracks")]
    LineSearchExhausted { backtracks: usize },

    /// A brute-force enumeration would exceed its point budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
