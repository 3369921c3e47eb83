use fdiva_opt::OptError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid case: {0}")]
    Semantic(String),
    #[error("unsupported case feature: {0}")]
    Unsupported(String),
    #[error("singular susceptance matrix: {0}")]
    Singular(String),
    #[error("injections do not balance: mismatch {0} MW")]
    Imbalance(f64),
    #[error("dispatch infeasible under the given attack")]
    DcopfInfeasible,
    #[error("dispatch problem unbounded")]
    DcopfUnbounded,
    #[error("invalid attack instance: {0}")]
    Instance(String),
    #[error("audit failed: {0}")]
    Audit(String),
    #[error(transparent)]
    Solver(#[from] OptError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{} invariant violation(s), first: {}", .0.violations.len(), .0.violations.first().map_or("", |s| s.as_str()))]
    Invariant(Box<crate::assess::AssessmentReport>),
}

pub type Result<T> = std::result::Result<T, Error>;
