//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A dense factorization hit an exactly singular pivot.
    #[error("singular linear system (pivot magnitude {pivot:.3e})")]
    Singular { pivot: f64 },

    /// The system is solvable but too ill-conditioned to trust;
    /// carries the estimated smallest singular value.
    #[error("ill-conditioned linear system (sigma_min ~ {sigma_min:.3e})")]
    IllConditioned { sigma_min: f64 },

    #[error("eigenvalue iteration failed to converge within {iterations} steps")]
    EigenNoConvergence { iterations: usize },

    /// Time integration produced a non-finite field.
    #[error("time integration diverged at step {step} (t = {time:.6e})")]
    Diverged { step: usize, time: f64 },

    #[error("checkpoint record {line} is corrupt: {reason}")]
    CorruptCheckpoint { line: usize, reason: String },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
