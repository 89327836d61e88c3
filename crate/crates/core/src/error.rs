use num_bigint::BigUint;
use thiserror::Error;

use crate::trace::RunTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("search space of {required} assignments exceeds the oracle cap of {cap}")]
    CapExceeded { required: BigUint, cap: u128 },

    #[error("agent {agent} has no robust demand: every bundle is empty")]
    NoDemand { agent: usize },

    #[error("efficiency ratio is undefined for an allocation with zero Nash welfare")]
    ZeroWelfare,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("instance generation failed: {0}")]
    Generation(String),

    /// No matching of the feasibility graph covers every touched slot.
    #[error("no matching covers touched slots {uncovered:?}")]
    Uncoverable { uncovered: Vec<usize> },

    #[error("internal invariant violated: {message}")]
    Invariant {
        message: String,
        trace: Option<Box<RunTrace>>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>, trace: Option<&RunTrace>) -> Self {
        Error::Invariant {
            message: msg.into(),
            trace: trace.map(|t| Box::new(t.clone())),
        }
    }
}
