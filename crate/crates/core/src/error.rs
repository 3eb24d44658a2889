use thiserror::Error;

#[derive(Debug, Error)]
pub enum PcglError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("grids are not nested: {0}")]
    NotNested(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { what: &'static str, iterations: usize, residual: f64 },

    #[error("estimate not claimed: {0}")]
    NotClaimed(String),

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PcglError> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(PcglError::Domain(msg.into()))
}
