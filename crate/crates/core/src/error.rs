use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite state at t = {t}")]
    BlowUp { t: f64 },

    #[error("linear solve residual {residual:.3e} exceeds {tolerance:.1e}")]
    Solver { residual: f64, tolerance: f64 },

    #[error("trajectory has no recorded step {0}")]
    MissingStep(usize),

    #[error("replica {replica} (seed {seed}) blew up at eps = {eps}, t = {t}")]
    ReplicaBlowUp { eps: f64, seed: u64, replica: u64, t: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
