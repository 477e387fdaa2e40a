use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The eigenvector matrix is numerically singular, so the operator is
    /// treated as non-diagonalizable.
    #[error("defective eigensystem: sigma_min/sigma_max = {ratio:e}, residual = {residual:e}")]
    Defective { ratio: f64, residual: f64 },

    /// A bound that holds in exact arithmetic was found broken.
    #[error("property violation: {0}")]
    Violation(String),

    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
