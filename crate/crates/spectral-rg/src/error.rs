use thiserror::Error;

#[derive(Debug, Error)]
pub enum SrgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("not a Feshbach pair: smallest singular value {smin:.3e} of the complementary block is below {threshold:.3e}")]
    NotFeshbachPair { smin: f64, threshold: f64 },
    #[error("outside polydisc: {0}")]
    OutsidePolydisc(String),
    #[error("fixed point iteration did not converge after {iterations} iterations (last step {last_step:.3e})")]
    FixedPointNotConverged { iterations: usize, last_step: f64 },
    #[error("Fock dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SrgError>;

impl From<ndarray_linalg::error::LinalgError> for SrgError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        SrgError::Linalg(e.to_string())
    }
}
