use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("non-finite integrand at node {index} (x = {point:?})")]
    Evaluation { index: usize, point: Vec<f64> },
    #[error("degenerate trial: {0}")]
    Degenerate(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e}): {detail}")]
    Convergence {
        iterations: usize,
        residual: f64,
        detail: String,
    },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
