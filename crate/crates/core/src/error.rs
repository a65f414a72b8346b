use thiserror::Error;

/// Errors produced by the DoE engine and its numerical building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid generator word `{word}`: {reason}")]
    InvalidGenerator { word: String, reason: String },

    #[error("design matrix is rank deficient (rank {rank} < {terms} terms)")]
    RankDeficient { rank: usize, terms: usize },

    #[error("matrix factorization failed after jitter escalation")]
    Factorization,

    #[error("all {starts} hyperparameter starts failed to factorize")]
    HyperparameterFit { starts: usize },

    #[error("objective evaluation failed at settings {settings:?}")]
    Evaluation { settings: Vec<f64> },

    #[error("point outside the design box: {0}")]
    OutOfBox(String),

    #[error("unknown trial `{0}`")]
    UnknownTrial(String),

    #[error("trial `{0}` is already observed")]
    AlreadyObserved(String),

    #[error("observations pending for trials {0:?}")]
    PendingObservations(Vec<String>),

    #[error("campaign is not accepting proposals (status {0})")]
    NotProposing(String),

    #[error("fixture malformed: {0}")]
    Fixture(String),
}

pub type Result<T> = std::result::Result<T, Error>;
