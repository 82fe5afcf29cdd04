use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violates a documented precondition or type invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// A construction would exceed the configured matrix dimension limit.
    #[error("resource limit exceeded: dimension {required} > limit {limit}")]
    Resource { required: usize, limit: usize },
    /// The input is valid but the requested quantity is undefined for it.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// An internal cross-check between two computation routes failed.
    #[error("internal consistency error: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
