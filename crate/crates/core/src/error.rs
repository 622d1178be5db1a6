use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("vector norm {norm:e} fell below tolerance")]
    ZeroNorm { norm: f64 },

    #[error("measurement update produced a zero-norm state (norm {norm:e}); reduce dt")]
    DegenerateUpdate { norm: f64 },

    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
