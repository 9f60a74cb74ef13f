use thiserror::Error;

use crate::utility::SpecError;

/// Errors surfaced by market construction, the solvers and the checkers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid utility for buyer {buyer}, good {good}: {source}")]
    InvalidSpec {
        buyer: String,
        good: String,
        #[source]
        source: SpecError,
    },

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("could not invert utility at target payoff {target}: {reason}")]
    InversionFailure { target: f64, reason: String },

    #[error("outside the supported domain: {0}")]
    DomainError(String),

    #[error("no supporting matching exists: {0}")]
    MatchingFailure(String),

    #[error("no critical alternating path from {0}")]
    PathNotFound(String),

    #[error("equilibria belong to different markets")]
    MarketMismatch,

    #[error("size limit exceeded: {what} is {actual}, limit is {limit}")]
    SizeLimit {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("no bounded competitive equilibrium exists for the requested bounds")]
    Infeasible,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
