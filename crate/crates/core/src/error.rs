use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("CFL condition violated: dt = {dt} s exceeds stable limit {limit} s")]
    CflViolation { dt: f64, limit: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}
