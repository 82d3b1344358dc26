use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, PscnnError>;

#[derive(Debug, Error)]
pub enum PscnnError {
    #[error("perfect shuffle requires an even width, got {0}")]
    OddWidth(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("ensemble has no modules")]
    EmptyEnsemble,

    #[error("module outputs differ in length: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("cannot decide on an empty score vector")]
    EmptyVector,

    #[error("calibration needs at least one activation")]
    BothListsEmpty,

    #[error("activation {0} lies outside [-1, 1]")]
    OutOfCodomain(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("unknown {what} `{value}`")]
    UnknownName { what: &'static str, value: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("row {row} has {actual} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        actual: usize,
    },

    #[error("model format version {found} is not supported (this build reads version {supported})")]
    VersionMismatch { found: u64, supported: u64 },

    #[error("corrupt model: {0}")]
    CorruptModel(String),
}

impl PscnnError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PscnnError::Io {
            path: path.into(),
            source,
        }
    }
}
