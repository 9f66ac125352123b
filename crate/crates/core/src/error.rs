use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the extraction, augmentation and training pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} outside domain [{min}, {max}]")]
    Domain {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("signal of {len} samples is shorter than one {window}-sample window")]
    SignalTooShort { len: usize, window: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("zero-norm vector at index {0}")]
    ZeroNorm(usize),

    #[error("pooled standard deviation is zero")]
    ConstantFold,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("rating {0} outside 1..=5")]
    RatingOutOfRange(i64),

    #[error("need at least {required} speakers, got {actual}")]
    TooFewSpeakers { required: usize, actual: usize },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    CorruptMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("{0} unexpected bytes after payload")]
    TrailingBytes(usize),

    #[error("dimensions {rows}x{cols} overflow the container")]
    DimensionOverflow { rows: u64, cols: u64 },

    #[error("missing tensor {0:?} in checkpoint")]
    MissingTensor(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
