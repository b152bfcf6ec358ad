//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the simulator.
///
/// `Domain` marks a physically meaningless argument (negative distance,
/// side-lobe gain outside `[0, 1)`), `Contract` a violated caller
/// precondition (beam count out of bounds, missing power entry), `Config` a
/// scenario file that failed to parse or validate, and `Infeasible` a
/// well-formed request that no assignment can satisfy (power budget below
/// the per-user floor, more paths requested than sectors exist).
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the physical domain of the model.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller broke an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Scenario document failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),

    /// Request is well-formed but cannot be satisfied.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }
}
