use std::path::PathBuf;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter lies outside its mathematical domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// Vector or matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An internal state invariant was violated (non-finite values, bad diagonals, ...).
    #[error("invalid state: {0}")]
    State(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("precision matrix is not positive definite: pivot {pivot} has value {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// The dense Gaussian sampler was asked for a dimension it cannot handle.
    #[error("problem dimension n = {n} exceeds the dense-sampler capacity {max}; use the gibbs-bps sampler instead")]
    Capacity { n: usize, max: usize },

    /// Filesystem failure, with the offending path.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
