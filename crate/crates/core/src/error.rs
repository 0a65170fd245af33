use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported character {0:?} in Morse text")]
    UnsupportedChar(char),

    #[error("buffer too short: {len} samples, need at least {needed} ({hint})")]
    TooShort {
        len: usize,
        needed: usize,
        hint: &'static str,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("zero-power {0}: SNR is undefined")]
    ZeroPower(&'static str),

    #[error("shape error at layer {layer}: {message}")]
    Shape { layer: usize, message: String },

    #[error("class {class:?} has {count} members, fewer than k = {k}")]
    ClassTooSmall { class: String, count: usize, k: usize },

    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: Vec<u8>, found: Vec<u8> },

    #[error("unsupported format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("truncated {what}: expected {expected} bytes, found {actual}")]
    Truncated {
        what: &'static str,
        expected: u64,
        actual: u64,
    },

    #[error("malformed {what}: {message}")]
    Malformed { what: &'static str, message: String },

    #[error("unsupported WAV format: {field} = {value}")]
    UnsupportedWav { field: &'static str, value: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Param(_) => "param",
            Error::Config(_) => "config",
            Error::UnsupportedChar(_) => "unsupported_char",
            Error::TooShort { .. } => "too_short",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::ZeroPower(_) => "zero_power",
            Error::Shape { .. } => "shape",
            Error::ClassTooSmall { .. } => "class_too_small",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::EmptyDataset(_) => "empty_dataset",
            Error::BadMagic { .. } => "bad_magic",
            Error::UnsupportedVersion { .. } => "unsupported_version",
            Error::Truncated { .. } => "truncated",
            Error::Malformed { .. } => "malformed",
            Error::UnsupportedWav { .. } => "unsupported_wav",
            Error::InvalidDataset(_) => "invalid_dataset",
            Error::UnknownLabel(_) => "unknown_label",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    /// Process exit status: 1 for invalid input or configuration, 2 for I/O
    /// failures, 3 for failures inside a computation.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } => 2,
            Error::NonFiniteLoss { .. } => 3,
            _ => 1,
        }
    }
}
