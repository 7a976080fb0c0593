use thiserror::Error;

/// Errors surfaced by the pricing and calibration routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative solver exhausted its budget without meeting tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// Malformed or inconsistent input data (files, surfaces, grids).
    #[error("invalid data: {0}")]
    InvalidData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidData(msg.into())
}
