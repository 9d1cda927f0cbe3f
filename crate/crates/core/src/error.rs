use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown node {0}")]
    UnknownNode(usize),

    #[error("state node {0} has no path from any input node")]
    Unactuated(usize),

    #[error("graph has no edges")]
    NoEdges,

    #[error("problem has {n} nodes, limit is {limit}; {hint}")]
    TooLarge { n: usize, limit: usize, hint: &'static str },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("no binary assignment satisfies the constraint bands at step {step}: {band}")]
    BandViolated { step: usize, band: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
