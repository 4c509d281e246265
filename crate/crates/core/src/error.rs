use thiserror::Error;

use crate::problems::IteratePoint;

/// Errors raised by oracles, solves and configuration checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompGradError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value encountered while evaluating the oracle at {point:?}")]
    Evaluation { point: Box<IteratePoint> },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solve { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T, E = CompGradError> = std::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(CompGradError::Dimension {
            context,
            expected,
            got,
        })
    }
}
