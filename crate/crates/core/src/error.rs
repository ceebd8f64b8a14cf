use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid shuffle spec: {0}")]
    InvalidSpec(String),

    #[error("invalid pile probability at entry {index}: {reason}")]
    InvalidPileProbability { index: usize, reason: String },

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid kernel input: {0}")]
    InvalidKernelInput(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("enumeration refused: {states} words exceed the budget of {budget}")]
    BudgetExceeded { states: BigUint, budget: u64 },

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
}
