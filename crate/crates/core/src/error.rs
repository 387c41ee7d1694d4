use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed edge at line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("probability out of range at line {line}")]
    ProbabilityOutOfRange { line: usize },
    #[error("empty input: no edges")]
    EmptyInput,
    #[error("missing probability for edge {source_label} -> {target_label}")]
    MissingProbability { source_label: String, target_label: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid cascade configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown node label {0:?}")]
    UnknownLabel(String),
    #[error("seed node {0} is not a candidate")]
    SeedNotCandidate(u32),
    #[error("activation is undefined at node {node} for offered cascades {offered:?}")]
    TableMiss { node: u32, offered: Vec<u16> },
    #[error("no offers to resolve at node {0}")]
    EmptyOffers(u32),
    #[error("empty tuple collection")]
    EmptyCollection,
    #[error("oracle guard exceeded: {0}")]
    GuardExceeded(String),
    #[error("random activation cannot be enumerated exactly")]
    NondeterministicActivation,
    #[error("resource cap exceeded: {needed} tuples requested, cap is {cap}")]
    ResourceCap { needed: u64, cap: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
