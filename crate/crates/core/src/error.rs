use thiserror::Error;

pub type Result<T> = std::result::Result<T, PottsError>;

#[derive(Debug, Error)]
pub enum PottsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} {value} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("enumeration needs {states} states, cap is {cap}")]
    EnumerationCap { states: f64, cap: u64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("degenerate sample batch: {0}")]
    DegenerateBatch(String),

    #[error("empty sample batch")]
    EmptyBatch,

    #[error("partial stepping stalled: no admissible gamma >= {gamma_min}")]
    SteppingStall { gamma_min: f64 },

    #[error("optimizer did not converge after {evaluations} evaluations (gradient max-norm {grad_norm:.3e})")]
    NonConvergence {
        evaluations: usize,
        grad_norm: f64,
        best: Vec<f64>,
    },

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("tau search: {0}")]
    TauSearch(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
