use thiserror::Error;

/// Errors raised by the numerical routines and the front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numeric failure in {what}: achieved error {achieved:e}")]
    NumericFailure { what: String, achieved: f64 },

    #[error("inconsistent results for {what}: {first} vs {second}")]
    Inconsistency {
        what: String,
        first: f64,
        second: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(what: impl Into<String>, achieved: f64) -> Self {
        Error::NumericFailure {
            what: what.into(),
            achieved,
        }
    }
}
