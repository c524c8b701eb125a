use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("not a Hopf point: {0}")]
    NotHopf(String),

    #[error("singular normalizing transform: {0}")]
    SingularTransform(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("step size underflow at t = {t}: {msg}")]
    StepUnderflow { t: f64, msg: String },

    #[error("graph property violated: {0}")]
    GraphViolation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for this error class: 2 for usage/config problems,
    /// 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParams(_) | Error::Config(_) | Error::Json(_) | Error::Domain(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
