use std::io;

use thiserror::Error;

use crate::formula::Var;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("variable x{0} is not alive")]
    InvalidVariable(Var),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{alive} alive variables exceed the enumeration budget of {budget}")]
    BudgetExceeded { alive: usize, budget: usize },

    #[error("formula is unsatisfiable")]
    Unsatisfiable,

    #[error("set size {size} outside the admissible window [{lo}, {hi}]")]
    WindowViolation { size: usize, lo: f64, hi: f64 },

    #[error("dimension {dim} exceeds the limit {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("reproducibility failure at step {step}: {detail}")]
    Reproducibility { step: usize, detail: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}
