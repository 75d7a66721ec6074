use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{what} index {index} out of range (size {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("corpus is missing utterances for (speaker, word) pairs {0:?}")]
    MissingCells(Vec<(usize, usize)>),

    #[error("corpus format error: {0}")]
    Format(String),

    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("non-finite probability ratio at batch transition {index}: {detail}")]
    NonFiniteRatio { index: usize, detail: String },

    #[error("word {0} was already requested in this game")]
    RepeatedWord(usize),

    #[error("game already used its word budget of {0}")]
    BudgetExhausted(usize),

    #[error("game is not finished ({turn} of {budget} words requested)")]
    NotTerminal { turn: usize, budget: usize },

    #[error("every action is masked")]
    AllMasked,

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
