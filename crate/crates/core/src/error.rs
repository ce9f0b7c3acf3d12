use alloc::boxed::Box;
use alloc::string::String;

/// Errors raised by the estimation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("node {node} is out of range for a graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },

    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("node set must be nonempty")]
    EmptyNodeSet,

    #[error("subset enumeration over {outside} nodes exceeds the cap of {cap}")]
    EnumerationCap { outside: usize, cap: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("infeasible topology request: {0}")]
    Infeasible(String),

    #[error("topology generation failed verification after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sequence of length {len} is shorter than the window {window}")]
    WindowTooShort { len: usize, window: usize },

    #[error("combination weights violate their contract: {0}")]
    WeightContract(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("round {round}, sensor {sensor}: {source}")]
    AtRound {
        round: usize,
        sensor: usize,
        source: Box<Error>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
