use std::path::PathBuf;

use crate::lstm::EpochRecord;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("data error at row {row}: {message}")]
    DataRow { row: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("zero standard deviation: {0}")]
    ZeroSd(String),

    #[error("mode count reduced at front year {year}: requested {requested}, found {found}; raise the warmup length or lower k")]
    ModeCountReduced {
        year: i32,
        requested: usize,
        found: usize,
    },

    #[error("history mismatch at year {year}: stored {stored}, supplied {supplied}")]
    HistoryMismatch {
        year: i32,
        stored: f64,
        supplied: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged {
        epoch: usize,
        history: Vec<EpochRecord>,
    },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::ZeroSd(_) | Error::NonFinite(_) | Error::Diverged { .. } => ErrorClass::Numeric,
            Error::ModeCountReduced { .. } => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }
}
