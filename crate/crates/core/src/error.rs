use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("matrix is not positive definite (pivot {pivot:e} at column {column})")]
    NotPositiveDefinite { column: usize, pivot: f64 },

    #[error("cholesky downdate broke down at row {row}")]
    DowndateFailure { row: usize },

    #[error("pivot block A(J,J) is numerically singular")]
    SingularPivotBlock,

    #[error("residual rank is smaller than the {needed} indices still to be chosen")]
    InfeasibleExtension { needed: usize },

    #[error("coefficient ratio is unreliable (condition estimate {condition:e})")]
    UnreliableRatio { condition: f64 },

    #[error("no admissible pivot candidate left after {found} selections")]
    Breakdown { found: usize },

    #[error("exhaustive search over {count} subsets exceeds the guard of {limit}")]
    CombinatorialGuard { count: u128, limit: u128 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
