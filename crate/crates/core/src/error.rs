use thiserror::Error;

pub type Result<T, E = DiracError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiracError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("degenerate constraint: {0}")]
    DegenerateConstraint(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("Dirac inclusion residual {residual:e} exceeds bound {bound:e}")]
    InclusionViolation { residual: f64, bound: f64 },

    #[error("analytic derivative {what} disagrees with finite differences (relative error {error:e})")]
    DerivativeMismatch { what: String, error: f64 },
}

impl DiracError {
    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        DiracError::DimensionMismatch {
            what,
            expected,
            got,
        }
    }
}

pub(crate) fn ensure_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(DiracError::dim(what, expected, got))
    }
}
