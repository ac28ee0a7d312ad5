use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WAV header in chunk '{chunk}': {reason}")]
    MalformedWav { chunk: String, reason: String },

    #[error("unsupported WAV codec in chunk '{chunk}': {reason}")]
    UnsupportedCodec { chunk: String, reason: String },

    #[error("invalid audio clip: {0}")]
    InvalidClip(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty dataset: no durations to take the maximum of")]
    EmptyDataset,

    #[error("clip contains no samples above the silence threshold {threshold}")]
    NoSignal { threshold: f64 },

    #[error("clip of {len} samples is shorter than one frame of {frame} samples")]
    TooShort { len: usize, frame: usize },

    #[error("filter design failed: {0}")]
    FilterDesign(String),

    #[error("mel filterbank design failed: {0}")]
    FilterbankDesign(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unknown category '{0}'")]
    UnknownCategory(String),

    #[error("unknown group '{0}'")]
    UnknownGroup(String),

    #[error("metadata error at line {line}: {reason}")]
    Metadata { line: usize, reason: String },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported container version {found} (this build reads up to {supported})")]
    Version { found: u16, supported: u16 },

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("malformed {kind} container: {reason}")]
    Container { kind: &'static str, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("PNG encoding error: {0}")]
    Png(#[from] png::EncodingError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error reflects numeric divergence rather than bad input.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Diverged { .. })
    }
}
