use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape or index disagreement between inputs.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input values violate a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested configuration is outside what this routine supports.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Problem size exceeds a documented cap (e.g. simplex row limit).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A feasibility requirement failed; the message reports the deficit.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The LP has no finite optimum.
    #[error("unbounded linear program")]
    Unbounded,

    /// An iterative solver did not reach its required tolerance.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Text input (CSV, LP file) failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
