use thiserror::Error;

/// Errors raised by the lab's numerical kernels and experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate covector: {0}")]
    DegenerateCovector(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
