use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not unitary (defect {defect:.3e} exceeds tolerance {tol:.3e})")]
    NotUnitary { defect: f64, tol: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("decomposition invariant violated: {0}")]
    InvariantViolation(String),

    #[error("factor budget of {budget} exhausted before reaching diagonal form")]
    BudgetExhausted { budget: usize },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("fidelity undefined: perturbed matrix has zero norm")]
    ZeroNorm,

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
