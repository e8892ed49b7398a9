use thiserror::Error;

/// Errors raised while building sources, channels, sessions or bounds.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("infeasible adversary: {0}")]
    Infeasible(String),

    #[error("dimension mismatch: distribution has {dist} entries, yield vector has {yields}")]
    Dimension { dist: usize, yields: usize },

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("no {0} pulses were sent; yield estimate unavailable")]
    EstimateUnavailable(&'static str),

    #[error("decoy source has no weight at photon number {0} where the signal source does")]
    UnboundedRatio(usize),

    #[error("cannot merge tallies: {0}")]
    Merge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
