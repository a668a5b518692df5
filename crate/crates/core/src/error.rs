use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite sample encountered: {0}")]
    NonFinite(String),
    #[error("degenerate cube: no grid cell intersects it")]
    DegenerateCube,
    #[error("inadmissible exponent pair: {0}")]
    InadmissiblePair(String),
    #[error("weight must be strictly positive: {0}")]
    NonPositiveWeight(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty family: {0}")]
    EmptyFamily(String),
    #[error("bisection failed to converge: {0}")]
    Convergence(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
