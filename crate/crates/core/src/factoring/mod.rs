//! Binary-multiplication clauses for a biprime and their classical reduction.

mod clauses;
mod expr;
mod oracle;
mod preprocess;

use num_bigint::BigUint;

pub use clauses::{
    bit_length, build_clauses, build_clauses_with, choose_bit_lengths, CarryBound, ClauseDoc, ClauseSystem, ClauseSystemDoc,
};
pub use expr::{Affine, BitVar, LinExpr, Monomial, ParseBitVarError, Replacement};
pub use oracle::{factor_oracle, is_biprime, TRIAL_DIVISION_BOUND};
pub use preprocess::{
    apply_rules_once, apply_rules_once_with, preprocess, preprocess_with, preprocess_number, condition_on, BoundMode, PreprocessReport,
    RuleOptions, DEFAULT_MAX_PASSES,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FactoringError {
    #[error("{0} is even")]
    EvenInput(BigUint),
    #[error("{0} is smaller than 9")]
    TooSmall(BigUint),
    #[error("split ({n_p}, {n_q}) does not fit a {n_bits}-bit input")]
    InvalidSplit { n_bits: u32, n_p: u32, n_q: u32 },
    #[error("clause {clause} reduces to the non-zero constant {value}")]
    Contradiction { clause: usize, value: i64 },
    #[error("assignment has no value for {0}")]
    MissingVariable(BitVar),
    #[error("assignment does not satisfy the clauses")]
    NotASolution,
    #[error("no factor of {0} within trial-division reach")]
    OracleOutOfReach(BigUint),
    #[error("malformed clause system: {0}")]
    Schema(String),
}
