use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed gain spec `{token}`: {reason}")]
    MalformedGain { token: String, reason: String },

    #[error("gain function is negative at x = {x}: g(x) = {value}")]
    NegativeGain { x: f64, value: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("derivative unavailable: {0}")]
    DerivativeUnavailable(String),

    #[error("assumption violation: {0}")]
    AssumptionViolation(String),

    #[error("no root: {0}")]
    NoRoot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
