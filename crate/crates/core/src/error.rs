use thiserror::Error;

/// Errors produced anywhere in the ingestion, testing, calibration and
/// backtesting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("load error at row {row}, column {column}: {message}")]
    Load {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("unknown maturity {0:?}")]
    UnknownMaturity(String),

    #[error("cannot classify maturity label {0:?}")]
    Classification(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("test error: {0}")]
    Test(String),

    #[error("shift error: {0}")]
    Shift(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("pipeline error: {0}")]
    Pipeline(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
