use alloc::string::String;

/// Errors reported by the tensor-completion primitives.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions {0:?}: every extent must be positive")]
    InvalidDims([usize; 3]),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: [usize; 3], found: [usize; 3] },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("value buffer has length {found}, expected {expected}")]
    BufferLength { expected: usize, found: usize },

    #[error("tensor entry {0} is not finite")]
    NonFinite(usize),

    #[error("index ({a},{b},{c}) out of range for dimensions {dims:?}")]
    IndexOutOfRange { a: usize, b: usize, c: usize, dims: [usize; 3] },

    #[error("mode must be 1, 2 or 3, got {0}")]
    InvalidMode(usize),

    #[error("operation requires a nonzero tensor")]
    ZeroTensor,

    #[error("digital-set enumeration of size {size} exceeds the limit {limit}")]
    EnumerationTooLarge { size: u128, limit: u128 },

    #[error("witness spectral norm {norm} exceeds the cap 1/2")]
    WitnessNorm { norm: f64 },

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("sample size {n} out of range 1..={total}")]
    SampleSize { n: usize, total: usize },

    #[error("sequence of length {available} is too short for {needed} draws")]
    InsufficientLength { needed: usize, available: usize },

    #[error("witness is not in the range of Q0_T (residual {residual:e})")]
    WitnessNotInRange { residual: f64 },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("target rank {rank} exceeds dimension {dim} in mode {mode}")]
    RankTooLarge { mode: usize, rank: usize, dim: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
