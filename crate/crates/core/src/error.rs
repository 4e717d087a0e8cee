use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("network generation did not reach full connectivity after {rounds} rounds (giant component {gcc_size}/{n_nodes})")]
    GenerationStalled {
        rounds: usize,
        gcc_size: usize,
        n_nodes: usize,
    },

    #[error("unphysical covariance matrix: {0}")]
    Unphysical(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("node {0} out of range for a network of {1} nodes")]
    NodeOutOfRange(usize, usize),

    #[error("source and target must differ (got {0})")]
    SameEndpoints(usize),

    #[error("network too large for exhaustive search: {0} nodes (max {1})")]
    TooLarge(usize, usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
