use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("index {index} out of range for mode {mode} of size {size}")]
    IndexOutOfRange { mode: usize, index: usize, size: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cardinality {r} must lie in 1..={n}")]
    BadCardinality { r: usize, n: usize },
    #[error("input vector is identically zero")]
    ZeroInput,
    #[error("matrix is identically zero")]
    ZeroMatrix,
    #[error("tensor is identically zero")]
    ZeroTensor,
    #[error("algorithm requires a tensor of order at least {min}, got {got}")]
    OrderTooSmall { min: usize, got: usize },
    #[error("oracle enumeration too large: {count} support tuples (limit {limit})")]
    TooLarge { count: u128, limit: u128 },
    #[error("initial point is infeasible: {0}")]
    InfeasibleInit(String),
    #[error("invalid cluster count: {0}")]
    BadK(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid sample count: {0}")]
    BadN(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the numbers themselves (degenerate data)
    /// rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroInput | Error::ZeroMatrix | Error::ZeroTensor
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
