use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: expected {expected} cells, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error(
        "CFL violation at t = {time}: dt·max|u|/dx = {courant:.4} exceeds the safety limit {limit}"
    )]
    Cfl { time: f64, courant: f64, limit: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{0} must be strictly positive everywhere")]
    NonPositive(String),

    #[error("insufficient realizations: got {got}, need at least {min}")]
    InsufficientRealizations { got: usize, min: usize },

    #[error("missing noise path: {0}")]
    MissingNoise(String),

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

/// Returns an error if any entry of `values` is NaN or infinite.
pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
