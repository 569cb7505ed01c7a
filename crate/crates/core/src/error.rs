use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("cannot parse probability {0:?}: {1}")]
    BadProbability(String, String),

    #[error("terminal count {0} out of range (1..=6)")]
    TerminalCount(usize),

    #[error("unknown terminal {0:?}")]
    UnknownTerminal(String),

    #[error("event expression error at offset {offset}: {msg}")]
    EventSyntax { offset: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("{what} exceeds the exact-enumeration cap: {got} > {cap}")]
    CapExceeded {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    #[error("invalid options: {0}")]
    Options(String),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
