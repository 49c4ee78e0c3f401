use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown wavelet `{name}`; supported: {supported}")]
    UnknownWavelet { name: String, supported: String },

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("signal of length {len} is shorter than the filter ({filter_len} taps)")]
    SignalTooShort { len: usize, filter_len: usize },

    #[error("length {len} is not divisible by 2^{levels}")]
    NotDivisible { len: usize, levels: usize },

    #[error("{levels} levels is too deep for length {len}")]
    LevelTooDeep { len: usize, levels: usize },

    #[error("boundary row {row} lies in the span of the previously orthogonalized rows")]
    RankDeficient { row: usize },

    #[error("sparse entry ({row}, {col}) {reason}")]
    BadEntry {
        row: usize,
        col: usize,
        reason: &'static str,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("truncated boundary mode is not invertible for {0} (filter length > 2)")]
    LossyInverse(String),

    #[error("at least two samples are required for a standard deviation, got {0}")]
    TooFewSamples(usize),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("non-finite loss at epoch {epoch}, step {step}: {detail}")]
    NonFinite {
        epoch: usize,
        step: usize,
        detail: String,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
