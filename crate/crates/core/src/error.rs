use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image is empty ({height}x{width}x{channels})")]
    ZeroSize {
        height: usize,
        width: usize,
        channels: usize,
    },

    #[error("{height}x{width} is not divisible by {factor}: both dimensions must be multiples of {factor}")]
    NotDivisible {
        height: usize,
        width: usize,
        factor: usize,
    },

    #[error("unsupported channel count {0} (expected 1 or 3)")]
    Channels(usize),

    #[error("data length {actual} does not match {height}x{width}x{channels}")]
    DataLength {
        height: usize,
        width: usize,
        channels: usize,
        actual: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("patch size {patch} exceeds image {height}x{width}")]
    PatchTooLarge {
        patch: usize,
        height: usize,
        width: usize,
    },

    #[error("candidate database is empty")]
    EmptyDatabase,

    #[error("misaligned patch grids: {0}")]
    Misaligned(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at step {step}: loss = {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("unsupported png: {0}")]
    UnsupportedPng(String),

    #[error("png decode failed for {path}: {source}")]
    PngDecode {
        path: PathBuf,
        #[source]
        source: png::DecodingError,
    },

    #[error("png encode failed for {path}: {source}")]
    PngEncode {
        path: PathBuf,
        #[source]
        source: png::EncodingError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ZeroSize { .. }
                | Error::NotDivisible { .. }
                | Error::Channels(_)
                | Error::DataLength { .. }
                | Error::Shape(_)
                | Error::PatchTooLarge { .. }
                | Error::EmptyDatabase
                | Error::Misaligned(_)
                | Error::Config(_)
                | Error::NonFinite(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
