use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Array or layer shapes do not fit together.
    #[error("shape error: {0}")]
    Shape(String),

    #[error("integration diverged at t = {t}: |x| = {x:e}, |v| = {v:e}")]
    Divergence { t: f64, x: f64, v: f64 },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("training aborted: non-finite loss at epoch {epoch}, batch {batch}")]
    TrainingDiverged { epoch: usize, batch: usize },

    #[error("forecast aborted: non-finite prediction at step {step}")]
    ForecastDiverged { step: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
