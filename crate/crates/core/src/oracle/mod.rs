//! Brute-force checkers, kept independent of the engine.

mod beta;
mod ex;
mod validity;

use thiserror::Error;

use crate::algebra::AlgebraError;

pub use beta::{alpha_eq, beta_normal_form};
pub use ex::{execution_formula, ExLimits, ExecutionFormula};
pub use validity::{check_net_validity, classify_semifull, ValidityReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{what} exceeds the bound of {limit}")]
    SizeBound { what: &'static str, limit: usize },
    #[error("no normal form within {0} steps")]
    FuelExhausted(u64),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
