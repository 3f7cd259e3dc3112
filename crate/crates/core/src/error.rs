use thiserror::Error;

#[derive(Debug, Error)]
pub enum MpkError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A bulk-synchronous program or exchange disagreed with its plan.
    #[error("protocol error in phase {phase} ({src} -> {dst}): {msg}")]
    Protocol {
        phase: usize,
        src: usize,
        dst: usize,
        msg: String,
    },

    /// A kernel read a value that had not been produced yet, or wrote outside its rows.
    #[error("logic error on rank {rank}: {msg}")]
    Logic { rank: usize, msg: String },

    #[error("setup error: {0}")]
    Setup(String),
}

pub type Result<T> = std::result::Result<T, MpkError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(MpkError::InvalidArgument(msg.into()))
}
