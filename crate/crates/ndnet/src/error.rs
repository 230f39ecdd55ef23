use thiserror::Error;

pub type Result<T, E = NdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NdError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(NdError::ShapeMismatch(msg.into()))
}
