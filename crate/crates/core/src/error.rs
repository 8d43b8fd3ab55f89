use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at coordinate {index}")]
    NonFinite { index: usize },

    #[error("outside the domain of the mirror map: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("horizon T = {horizon} is too short; at least T = {minimum} is required")]
    HorizonTooShort { horizon: usize, minimum: usize },

    #[error("reference solver stopped after {iterations} iterations with best residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("mini-batch oracle ran out of examples after {served} examples (shuffle disabled)")]
    OracleExhausted { served: usize },

    #[error("row {row}: {message}")]
    Data { row: usize, message: String },

    #[error("non-finite loss in trial {trial} at epoch {epoch} (train {train_loss}, test {test_loss})")]
    NonFiniteLoss {
        trial: usize,
        epoch: usize,
        train_loss: f64,
        test_loss: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
