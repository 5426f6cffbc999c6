use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported board size {0}")]
    UnsupportedBoard(u8),
    #[error("unknown game id `{0}`")]
    UnknownGame(String),
    #[error("game is over")]
    TerminalState,
    #[error("illegal action {0}")]
    IllegalAction(u8),
    #[error("malformed information state key `{0}`")]
    BadKey(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed distribution at {key}: {reason}")]
    BadDistribution { key: String, reason: String },
    #[error("game too large for the oracle: more than {limit} histories")]
    LimitExceeded { limit: u64 },
    #[error("{0}")]
    Unsupported(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
