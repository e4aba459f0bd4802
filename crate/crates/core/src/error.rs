use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("out of range: {0}")]
    Range(String),

    /// A numerical result did not meet its accuracy budget.
    #[error("accuracy target missed: {0}")]
    Accuracy(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The requested closed form does not exist on this side of `b_z tau = 1`.
    #[error("correlator branch: {0}")]
    Branch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be finite, got {value}")))
    }
}
