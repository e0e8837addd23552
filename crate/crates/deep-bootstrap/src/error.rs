//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation contract (mismatched lengths, bad shapes).
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Objective or iterate became non-finite during an optimization loop.
    #[error("non-finite value in {context} (epoch {epoch}, draw {draw})")]
    NonFinite {
        context: &'static str,
        epoch: usize,
        draw: usize,
    },

    /// A statistic could not be computed from degenerate input
    /// (constant chains, single-class test sets, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The Metropolis-Hastings chain accepted nothing over its check window;
    /// the proposal standard deviation is almost surely too large.
    #[error(
        "zero acceptances over the first {window} post-burn-in steps \
         (proposal sd {proposal_sd}); reduce the proposal scale"
    )]
    ZeroAcceptance { window: usize, proposal_sd: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
