use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed binary record in a vector/ground-truth file.
    #[error("format error in {path}: {msg} (byte offset {offset})")]
    Format {
        path: PathBuf,
        offset: u64,
        msg: String,
    },

    /// Bad token in a text file (label lists, query expressions).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("label {0} is not present in the index")]
    UnknownLabel(u32),

    #[error("label {0} is not in the high-specificity partition")]
    NotHsLabel(u32),

    #[error("label {0} is not in the low-specificity partition")]
    NotLsLabel(u32),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point index {index} out of range for {n_points} points")]
    PointOutOfRange { index: u64, n_points: u64 },

    #[error("index file is corrupt: {0}")]
    CorruptIndex(String),

    #[error("executor lifecycle error: {0}")]
    Lifecycle(String),

    /// A submitted job could not produce a result (executor shut down or the
    /// worker failed while running it).
    #[error("job cancelled: {0}")]
    Cancelled(String),
}

pub type Result<T> = std::result::Result<T, Error>;
