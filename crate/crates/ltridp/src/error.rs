use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    Format(String),

    #[error("image too small: {width}x{height} (minimum {min}x{min})")]
    ImageSize {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("pixel ({x}, {y}) is not an interior pixel")]
    OutOfDomain { x: usize, y: usize },

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("training set must contain both classes")]
    SingleClass,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid fold count {k} for {n} samples")]
    FoldCount { k: usize, n: usize },

    #[error("each class needs at least {min} samples, class {label} has {got}")]
    ClassTooSmall { label: i8, min: usize, got: usize },

    #[error("invalid model file: {0}")]
    Model(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid feature store: {0}")]
    Store(String),
}

pub type Result<T> = std::result::Result<T, Error>;
