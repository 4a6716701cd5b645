//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by matrix arithmetic, validation predicates and the
/// enumeration guards.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or tensor-factor dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An input violates a structural invariant (non-unitary matrix,
    /// weights that do not sum to one, inconsistent assignment, ...).
    #[error("validation failed: {0}")]
    Validation(String),

    /// A quantity that must be real or normalized came out numerically
    /// inconsistent beyond tolerance.
    #[error("numerical consistency: {0}")]
    Numerical(String),

    /// An exhaustive enumeration would exceed the configured guard.
    #[error("resource guard exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;
