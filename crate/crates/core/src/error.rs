use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value {value} at node {index} (r = {r})")]
    NonFinite { index: usize, r: f64, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("under-resolved grid: {0}")]
    UnderResolved(String),

    #[error("extinction reached: J = {0:e}")]
    Extinct(f64),

    #[error("flow failure at t = {t}: {reason}")]
    FlowFailure { t: f64, reason: String },

    #[error("not enough samples: {0}")]
    TooFewSamples(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
