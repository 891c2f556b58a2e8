use thiserror::Error;

pub type Result<T, E = CoreError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("feature dimension mismatch: model expects {expected}, data has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("sample weights sum to zero")]
    ZeroWeightSum,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("client shard is empty")]
    EmptyShard,
    #[error("no client updates to aggregate")]
    EmptyUpdates,
    #[error("cannot select {requested} of {available} clients per round")]
    SubsetTooLarge { requested: usize, available: usize },
    #[error("{clients} clients cannot be filled from {rows} training rows")]
    TooManyClients { clients: usize, rows: usize },
    #[error("partition left a client empty after {attempts} attempts; alpha too small for this client count")]
    PartitionExhausted { attempts: usize },
    #[error("sensitive group {0} is absent")]
    MissingSensitiveGroup(u8),
    #[error("round {round} is past the configured {total} rounds")]
    RoundOutOfRange { round: usize, total: usize },
    #[error("all paired differences are zero; the signed-rank test does not apply")]
    AllDifferencesZero,
}
