use thiserror::Error;

use crate::market::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(ValidationReport),

    #[error("instance has {buyers} buyers and {items} items but the outcome covers {outcome_buyers} buyers and {outcome_items} items")]
    DimensionMismatch {
        buyers: usize,
        items: usize,
        outcome_buyers: usize,
        outcome_items: usize,
    },

    #[error("unknown buyer {0}")]
    UnknownBuyer(usize),

    #[error("round {round} is out of range for {num_items} items")]
    RoundOutOfRange { round: usize, num_items: usize },

    #[error("instance too large for exhaustive search: {what}")]
    InstanceTooLarge { what: String },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("mechanism needs at least one buyer")]
    NoBuyers,

    #[error("allocation of buyer {buyer} is not monotone in its bid (probe pattern {pattern})")]
    NonMonotone { buyer: usize, pattern: String },

    #[error("unknown {kind} `{name}`")]
    UnknownId { kind: &'static str, name: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
