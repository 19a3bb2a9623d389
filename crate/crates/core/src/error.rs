use thiserror::Error;

/// Errors surfaced by the estimation, bounding and inference routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("utility is not increasing in income at z={z} on [{lo}, {hi}]")]
    InvalidUtility { z: f64, lo: f64, hi: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid data-generating process: {0}")]
    InvalidDgp(String),
    #[error("no observations with positive kernel weight around z0={z0} (bandwidth {bandwidth})")]
    NoSupport { z0: f64, bandwidth: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("row {row}, column `{column}`: {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },
    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
