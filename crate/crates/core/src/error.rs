use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is outside the supported range 1..=8")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate overflow")]
    Overflow,

    #[error("operation requires a nonempty point set")]
    EmptySet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("solver did not converge after {iterations} iterations (gap {gap:e}, best energy {energy})")]
    NonConvergence { iterations: usize, gap: f64, energy: f64 },

    #[error("support of size {size} exceeds the limit {limit}")]
    SupportTooLarge { size: usize, limit: usize },

    #[error("point outside the admissible domain: {0}")]
    OutOfDomain(String),

    #[error("work budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("operation needs the full edge configuration; sample was pruned")]
    PrunedSample,

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: u64, limit: u64 },

    #[error("exponent condition violated: {0}")]
    ExponentCondition(String),

    #[error("unsupported random set kind: {0}")]
    UnsupportedKind(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
