use thiserror::Error;

/// Errors raised while constructing or validating networks and partitions.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-edge at row {row}: node {node} at time {time}")]
    SelfEdge { row: usize, time: usize, node: usize },
    #[error("node index {node} out of range [0, {num_nodes}) at row {row}")]
    NodeOutOfRange {
        row: usize,
        node: usize,
        num_nodes: usize,
    },
    #[error("time index {time} out of range [0, {num_times}) at row {row}")]
    TimeOutOfRange {
        row: usize,
        time: usize,
        num_times: usize,
    },
    #[error("label {label} at (t={time}, node={node}) exceeds capacity {k_up}")]
    LabelOutOfRange {
        time: usize,
        node: usize,
        label: usize,
        k_up: usize,
    },
    #[error("empty dimension: num_nodes and num_times must be positive")]
    EmptyDimension,
    #[error("label matrix is ragged: row {row} has {got} entries, expected {expected}")]
    RaggedLabels { row: usize, got: usize, expected: usize },
    #[error("dimension mismatch: network is {net_times}x{net_nodes}, partition is {part_times}x{part_nodes}")]
    DimensionMismatch {
        net_times: usize,
        net_nodes: usize,
        part_times: usize,
        part_nodes: usize,
    },
}

/// Errors raised by file ingestion and serialization.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: partition is not total: missing entry for (t={time}, node={node})")]
    MissingEntry {
        path: String,
        time: usize,
        node: usize,
    },
    #[error("{path}: {source}")]
    Graph {
        path: String,
        #[source]
        source: GraphError,
    },
}

/// Errors raised by configuration validation (simulation, fitting).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("hyperparameters must be strictly positive (a={a}, b={b}, delta={delta})")]
    NonPositiveHyper { a: f64, b: f64, delta: f64 },
    #[error("pi must lie in (0, 1], got {0}")]
    PiOutOfRange(f64),
    #[error("probability {name} must lie in [0, 1], got {value}")]
    ProbOutOfRange { name: &'static str, value: f64 },
    #[error("a single group requires pi = 1 (off-diagonal mass is undefined)")]
    SingleGroupNeedsUnitPi,
    #[error("num_groups must be at least 1")]
    NoGroups,
    #[error("unknown initialization strategy `{0}`")]
    UnknownStrategy(String),
    #[error("k must satisfy 1 <= k <= number of points ({n}), got {k}")]
    BadK { k: usize, n: usize },
    #[error("partitions have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
}
