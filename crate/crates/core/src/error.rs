use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular value decomposition did not converge for a {rows}x{cols} matrix")]
    Decomposition { rows: usize, cols: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("rank deficient matrix: {0}")]
    Rank(String),
    #[error("quantization region {0} is empty")]
    EmptyRegion(usize),
    #[error("codebook training degenerated: {0}")]
    Degenerate(String),
    #[error("malformed codebook: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
