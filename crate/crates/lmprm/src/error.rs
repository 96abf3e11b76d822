use thiserror::Error;

/// Crate-wide error type. CLI exit codes are derived from these variants.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rejection sampling exhausted after {budget} consecutive rejections")]
    SamplingExhausted { budget: usize },

    #[error("calibration bracket failure: {0}")]
    BracketFailure(String),

    #[error("unknown objective `{0}`")]
    UnknownObjective(String),

    #[error("vertex id {id} out of range (n = {n})")]
    InvalidVertex { id: u32, n: usize },

    #[error("parent chain does not terminate: cycle detected")]
    CycleDetected,

    #[error("landmark table fingerprint {table:#018x} does not match graph fingerprint {graph:#018x}")]
    FingerprintMismatch { table: u64, graph: u64 },

    #[error("optimality audit failed: method `{method}` cost {cost} vs reference {reference}")]
    CostMismatch {
        method: String,
        cost: f64,
        reference: f64,
    },

    /// Malformed on-disk artifact: bad magic, unsupported version, truncation,
    /// or checksum failure.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
