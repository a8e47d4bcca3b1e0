//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by constructions, numerical kernels and simulations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A state-family specification is outside its admissible range.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A requested measurement would have a non-positive POVM element.
    #[error("positivity violation: {reason} (min eigenvalue {min_eigenvalue:e})")]
    PositivityViolation { reason: String, min_eigenvalue: f64 },

    /// A matrix expected to be positive semidefinite is not.
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    /// A matrix expected to be positive definite failed a pivot/eigenvalue check.
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    /// A Gram matrix is numerically singular, so the family is not usable.
    #[error("gram matrix is numerically singular (min eigenvalue {min_eigenvalue:e})")]
    SingularGram { min_eigenvalue: f64 },

    /// An iterative kernel did not converge within its iteration cap.
    #[error("numerical failure: no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    /// Vectors of mismatched dimension were combined.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A chain plan violates the overlap ladder constraints.
    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    /// The operation is defined only for another family variant.
    #[error("unsupported: {0}")]
    Unsupported(String),
}
