use thiserror::Error;

use crate::instance::ChoreId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("chore {chore} is out of range for m = {m}")]
    InvalidChore { chore: ChoreId, m: usize },

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("operation requires an additive cost function")]
    UnsupportedCostKind,

    #[error("chore {0} has zero cost; the cost ratio is undefined")]
    ZeroCostChore(ChoreId),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("m = {m} exceeds the limit {limit} for {what}")]
    ScaleLimit { what: &'static str, m: usize, limit: usize },

    #[error("epsilon {epsilon} violates epsilon * 2^(m+1) < delta = {delta}")]
    EpsilonTooLarge { epsilon: String, delta: String },

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("invariant broken: {0}")]
    InvariantBroken(String),

    /// A proven step property failed at runtime. Surfaces a discrepancy
    /// between the correctness argument and the implementation.
    #[error("solver contract violated: {0}")]
    ContractViolated(String),

    #[error("instance generation failed for seed {seed}: {reason}")]
    GenFailure { seed: u64, reason: String },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
