use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("config file line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("channel constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty trace")]
    EmptyTrace,

    #[error("episode already finished")]
    EpisodeDone,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },

    #[error("architecture mismatch: {0}")]
    Architecture(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("invalid standard deviation {0}")]
    InvalidSigma(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
