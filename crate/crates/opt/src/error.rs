use thiserror::Error;

/// Errors reported by the LP and MILP solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("search limit reached without an incumbent ({0})")]
    NoIncumbent(String),
}

pub type OptResult<T> = Result<T, OptError>;
