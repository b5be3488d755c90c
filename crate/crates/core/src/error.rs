//! Crate-wide error type.

use alloc::string::String;

/// Alias for results produced by this crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors surfaced by the toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter or configuration value violates its contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The data cannot support the requested operation (empty samples,
    /// unsatisfiable threshold rules, too few events).
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// A computation degenerated numerically (zero variance, non-finite
    /// intermediate).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
