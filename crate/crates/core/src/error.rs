use thiserror::Error;

/// Errors raised by the core engines and models.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("word width {0} outside 2..=64")]
    InvalidWidth(u32),
    #[error(
        "accumulator for {width}-bit operands over {count} products needs {needed} bits (max 64)"
    )]
    AccumulatorTooWide { width: u32, count: u64, needed: u32 },
    #[error("shape must have at least one dimension and no zero-sized dimension: {0:?}")]
    InvalidShape(Vec<usize>),
    #[error("data length {got} does not match shape product {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value {value} outside the {width}-bit range")]
    OutOfRange { value: i64, width: u32 },
    #[error("index {index:?} out of bounds for shape {shape:?}")]
    IndexOutOfBounds {
        index: Vec<usize>,
        shape: Vec<usize>,
    },
    #[error("bin index {index} out of range for {bins} bins")]
    BinOutOfRange { index: usize, bins: usize },
    #[error("bin count {0} outside 2..=256")]
    InvalidBinCount(usize),
    #[error("dictionary must hold 1..=256 centroids, got {0}")]
    InvalidDictionary(usize),
    #[error("cannot quantize an empty weight set")]
    EmptyWeights,
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("{what} shape {got:?} does not match expected {expected:?}")]
    ShapeMismatch {
        what: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}
