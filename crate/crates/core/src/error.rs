use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error on {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("unsupported wav format: {0}")]
    UnsupportedFormat(String),

    #[error("zero-length audio")]
    EmptyAudio,

    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("transcript parse error at line {line}: {message}")]
    Transcript { line: usize, message: String },

    #[error("empty transcript")]
    EmptyTranscript,

    #[error("empty source distribution")]
    EmptySource,

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("unknown schema: model file declares version {found}, this build reads version {supported}")]
    UnknownSchema { found: u32, supported: u32 },

    #[error("model/config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("no training data")]
    NoTrainingData,

    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn wav(path: impl Into<PathBuf>, source: hound::Error) -> Self {
        match source {
            hound::Error::IoError(e) => Error::io(path, e),
            other => Error::Wav {
                path: path.into(),
                source: other,
            },
        }
    }
}
