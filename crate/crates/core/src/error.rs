use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's preconditions (shape mismatch, stale cache, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid reliability profile: {0}")]
    Profile(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("incomplete session: level {level} missing")]
    IncompleteSession { level: usize },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("format error at offset {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
