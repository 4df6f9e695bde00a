use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sequence too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("need at least 2 receive antennas for conjugate multiplication, got {0}")]
    TooFewReceivers(usize),

    #[error("insufficient samples: need {needed}, have {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },

    #[error("signal has no extrema")]
    NoExtrema,

    #[error("primary subcarrier has zero response at the breathing rate")]
    DegeneratePrimary,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("correlation window {window} exceeds sequence length {len}")]
    WindowTooLarge { window: usize, len: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
