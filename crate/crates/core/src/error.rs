use thiserror::Error;

pub type Result<T> = std::result::Result<T, LhfiError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LhfiError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("update not applicable: {0}")]
    NotApplicable(String),

    #[error("sampler internal state: {0}")]
    InternalState(String),

    #[error("initialization failed: {0}")]
    Initialization(String),
}

impl LhfiError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LhfiError::InvalidArgument(msg.into())
    }
}
