use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid feature spec: {0}")]
    Spec(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("degenerate objective: {0}")]
    Degenerate(String),
    #[error("singular feature covariance: {0}")]
    Rank(String),
    #[error("search failed: {0}")]
    Search(String),
    #[error("invalid data: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
