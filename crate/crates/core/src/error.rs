use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable sets overlap on `{0}`")]
    OverlappingSets(String),

    #[error("table of {cells} cells exceeds the {cap}-cell cap")]
    TableTooLarge { cells: u128, cap: usize },

    #[error("invalid model: {0}")]
    InvalidSem(String),

    #[error("internal consistency violation: {0}")]
    ConsistencyViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gold relevance labels required: {0}")]
    MissingLabels(String),

    #[error("basis provenance mismatch: {0}")]
    BasisMismatch(String),

    #[error("verbalizer has no phrase for symbol `{0}`")]
    MissingSymbol(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{path}:{line}: {message}")]
    CorpusParse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
