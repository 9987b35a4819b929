use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch { context: &'static str, expected: String, found: String },

    #[error("invalid model config: {0}")]
    InvalidConfig(String),

    #[error("weight file error: {0}")]
    Weights(#[from] WeightsError),

    #[error("reference signal is silent; the metric is undefined")]
    SilentReference,

    #[error("signal too short: {0}")]
    TooShort(String),

    #[error("cannot set SNR: {0} is silent")]
    CannotSetSnr(&'static str),

    #[error("unsupported audio: {0}")]
    UnsupportedAudio(String),

    #[error("wav error for {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failure modes when reading or validating a serialized weight file.
/// Each corruption class gets its own variant so callers can tell them apart.
#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("bad magic {0:?}, expected \"FBSD\"")]
    BadMagic([u8; 4]),

    #[error("unsupported format version {found} (this build reads {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("corrupt header: {0}")]
    CorruptHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("unknown tensors: {}", .0.join(", "))]
    UnknownTensors(Vec<String>),

    #[error("missing tensors: {}", .0.join(", "))]
    MissingTensors(Vec<String>),

    #[error("tensor {name} has shape {found:?}, config requires {expected:?}")]
    TensorShape { name: String, expected: Vec<usize>, found: Vec<usize> },

    #[error("tensor {name} appears more than once")]
    DuplicateTensor { name: String },

    #[error("tensor {name} holds non-finite values")]
    NonFinite { name: String },
}

pub(crate) fn shape_err(context: &'static str, expected: impl ToString, found: impl ToString) -> Error {
    Error::ShapeMismatch { context, expected: expected.to_string(), found: found.to_string() }
}
