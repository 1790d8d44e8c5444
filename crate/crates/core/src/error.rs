use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("codebook of {cardinality} points exceeds the limit of {limit}")]
    CodebookTooLarge { cardinality: u128, limit: u128 },

    #[error("sublattice scale must satisfy |a| > 1, got {0}")]
    InvalidScale(String),

    #[error("feedback index {index} out of range for a phase set of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid phase codebook: {0}")]
    InvalidPhaseCodebook(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
