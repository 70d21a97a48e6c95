use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or fraction did not reach the requested tolerance.
    #[error("{routine} did not converge after {terms_used} terms (estimated error {est_error:e})")]
    NonConvergence {
        routine: &'static str,
        terms_used: usize,
        est_error: f64,
    },

    /// Every ratio method failed; carries the individual failures in attempt order.
    #[error("all ratio methods failed: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    AllMethodsFailed(Vec<Error>),

    /// A result that does not fit in binary64.
    #[error("range error: {0}")]
    Range(String),

    /// A parameter combination hitting a removable or essential singularity.
    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
