use thiserror::Error;

/// Errors reported by the kinematics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not in se(3): {0}")]
    NotSe3(String),

    #[error("derivative stack has order {have}, {need} required")]
    InsufficientOrder { have: usize, need: usize },

    #[error("requested order {requested} exceeds supported maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },

    #[error("singular configuration: smallest singular value {sigma_min:.3e}, condition {condition:.3e}")]
    Singular { sigma_min: f64, condition: f64 },

    #[error("loop closure violated: residual {residual:.3e} exceeds {tol:.1e}")]
    ClosureViolation { residual: f64, tol: f64 },

    #[error("joint screw {joint} has zero norm")]
    ZeroScrew { joint: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
