use thiserror::Error;

#[derive(Debug, Error)]
pub enum OscilletError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("basis construction failed: {0}")]
    Construction(String),
    #[error("moment system at cube j={level} k={position:?} is ill-conditioned (condition number {condition:.3e})")]
    Conditioning {
        level: u32,
        position: Vec<usize>,
        condition: f64,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, OscilletError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(OscilletError::Parameter(msg.into()))
}
