use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim} (size {size})")]
    Index {
        dim: usize,
        index: usize,
        size: usize,
    },

    #[error("expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("time step {t} outside 1..={horizon}")]
    Time { t: usize, horizon: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("{what} needs {needed} entries, limit is {limit}")]
    Capacity {
        what: &'static str,
        needed: u128,
        limit: usize,
    },

    #[error("invalid {what}: {reason}")]
    Validation { what: &'static str, reason: String },

    #[error("agent contract violated: {0}")]
    Contract(String),

    #[error("divergence at transition {transition}: {detail}")]
    Divergence { transition: u64, detail: String },

    #[error("oracle unavailable for environment `{0}`: no explicit dynamics")]
    OracleUnavailable(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            what,
            reason: reason.into(),
        }
    }
}
