use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("source `{source_id}` has {rows} rows, need at least {needed}")]
    SourceTooSmall {
        source_id: String,
        rows: usize,
        needed: usize,
    },
    #[error("unknown source `{0}`")]
    UnknownSource(String),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("singular system in {0}")]
    Singular(String),
    #[error("row {0} falls outside every partition box")]
    OutsidePartition(usize),
    #[error("unsupported model document version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("invalid cluster for `{target}`: {reason}")]
    Cluster { target: String, reason: String },
    #[error("subset instance: {0}")]
    Subset(String),
    #[error("no sources satisfy the eligibility threshold")]
    EmptyEligibleSet,
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
