use std::path::PathBuf;

/// Errors produced by model construction, training, streaming, metrics and
/// data ingestion.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {what}: {why}")]
    InvalidArgument { what: &'static str, why: String },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("models cannot be averaged: {0}")]
    IncompatibleModels(String),

    #[error("gradient contains non-finite values; reduce the learning rate")]
    NonFiniteGradient,

    #[error("training diverged at epoch {epoch}: loss is not finite; reduce the learning rate")]
    Diverged { epoch: usize },

    #[error("parameters became non-finite after an update; reduce the learning rate")]
    NonFiniteParameters,

    #[error("cannot make {requested} partitions from {rows} rows")]
    TooFewRows { rows: usize, requested: usize },

    #[error("window is full (capacity {capacity}); slide before enqueueing")]
    WindowFull { capacity: usize },

    #[error("window is not full ({len} of {capacity} batches)")]
    WindowNotFull { len: usize, capacity: usize },

    #[error("need at least {needed} batches for window size {window}, got {got}")]
    TooFewBatches {
        needed: usize,
        window: usize,
        got: usize,
    },

    #[error("both a positive and a negative label are required, found only one class")]
    SingleClass,

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error(
        "target value {value:?} on data row {row} is not numeric; \
         pass a positive label to read it as a class"
    )]
    TargetNotNumeric { row: usize, value: String },

    #[error("no valid data rows in {path} ({rejected} rejected)")]
    NoValidRows { path: PathBuf, rejected: usize },

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
