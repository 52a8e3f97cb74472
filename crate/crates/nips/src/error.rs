//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NipsError {
    /// Inputs violate an operation's preconditions (non-finite entries,
    /// negative weights, infeasible starting points, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Solver or regularizer configuration is inconsistent (e.g. a stepsize
    /// window constant outside (0, 1/L)).
    #[error("configuration error: {0}")]
    Config(String),

    /// A constraint set turned out to be empty.
    #[error("empty feasible set: {0}")]
    EmptySet(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An iterative routine failed to reach its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Brute-force oracle could not produce a certificate.
    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NipsError>;
