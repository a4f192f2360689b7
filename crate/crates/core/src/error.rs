use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate input row {row} (identical to row {existing})")]
    DuplicateInput { row: usize, existing: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    /// Kernel matrix could not be factorized even at the largest jitter.
    #[error("singular kernel matrix (max jitter {jitter:e}); closest rows {row_a} and {row_b} at distance {distance:e}")]
    SingularData {
        jitter: f64,
        row_a: usize,
        row_b: usize,
        distance: f64,
    },

    #[error("invalid zone: {0}")]
    InvalidZone(String),

    #[error("grid graph is disconnected: node `{0}` unreachable from slack")]
    Disconnected(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("simulation of scenario {index} failed: {source}")]
    Scenario {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
