//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors produced by scenario construction, closed-form evaluation, the
/// Monte Carlo estimators, and the GA driver.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a structural invariant (non-square array size,
    /// negative path loss, inconsistent population split, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A config file failed schema validation or could not be parsed.
    #[error("config error: {0}")]
    Config(String),

    /// A user or element index is outside the scenario's range.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The requested quantity is undefined for these parameters
    /// (zero denominator, degenerate threshold, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation was called in a way its contract forbids.
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
