use thiserror::Error;

/// Errors raised by topology construction, scoring, optimization and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range configuration: {0}")]
    RangeConfig(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("no connected layout found after {attempts} draws")]
    ConnectivityUnreachable { attempts: usize },

    #[error("incomplete assignment: expected {expected} radios, got {got}")]
    IncompleteAssignment { expected: usize, got: usize },

    #[error("radio {node}:{radio} uses channel {channel}, but only {channel_count} channels exist")]
    ChannelOutOfRange {
        node: u32,
        radio: usize,
        channel: u16,
        channel_count: usize,
    },

    #[error("assignment does not match topology: {0}")]
    Mismatch(String),

    #[error("exhaustive search needs {channels}^{radios} assignments, budget is {budget}")]
    BudgetExceeded {
        channels: usize,
        radios: usize,
        budget: u64,
    },

    #[error("topology is not a generated grid")]
    NotAGrid,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
