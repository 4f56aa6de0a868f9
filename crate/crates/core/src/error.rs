use thiserror::Error;

/// Errors produced by the estimation toolkit.
#[derive(Debug, Error)]
pub enum DoaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    /// The requested source count cannot be resolved by the coarray.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Shrinkage parameter above the identifiability bound.
    #[error("shrinkage a = {a} exceeds the identifiability bound: max a = {max} (UDOF = {udof}, D = {sources})")]
    ShrinkageTooLarge {
        a: usize,
        max: usize,
        udof: usize,
        sources: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DoaError>;

pub(crate) fn invalid(msg: impl Into<String>) -> DoaError {
    DoaError::InvalidArgument(msg.into())
}
