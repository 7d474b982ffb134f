use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The virtual network cannot host the cyclic construction.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("cannot null {nulled} users with {antennas} transmit antennas")]
    InfeasibleNulling { nulled: usize, antennas: usize },

    /// A transmission whose weakest user sees zero SINR never completes.
    #[error("transmission has zero minimum SINR; delivery time is unbounded")]
    InfiniteTime,

    #[error("schedule parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("schedule failed verification: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
