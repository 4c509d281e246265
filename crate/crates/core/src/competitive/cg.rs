use nalgebra::DVector;

use crate::error::{CompGradError, Result};

#[derive(Debug, Clone)]
pub(crate) struct CgOutcome {
    pub solution: DVector<f64>,
    pub iterations: usize,
}

/// Conjugate gradient for an SPD operator given only as a matrix-vector
/// product. Stops once `||r|| <= tol * ||b||`.
pub(crate) fn conjugate_gradient<A>(mut apply: A, b: &DVector<f64>, tol: f64, max_iters: usize) -> Result<CgOutcome>
where
    A: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let b_norm = b.norm();
    let mut x = DVector::zeros(b.len());
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
        });
    }
    let target = tol * b_norm;
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    for it in 1..=max_iters {
        let ap = apply(&p)?;
        let curvature = p.dot(&ap);
        if !(curvature > 0.0) {
            return Err(CompGradError::Numeric(format!(
                "conjugate gradient met non-positive curvature {curvature:e}; operator is not SPD"
            )));
        }
        let step = rr / curvature;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        let rr_next = r.norm_squared();
        if rr_next.sqrt() <= target {
            return Ok(CgOutcome {
                solution: x,
                iterations: it,
            });
        }
        p = &r + &p * (rr_next / rr);
        rr = rr_next;
    }
    Err(CompGradError::Solve {
        iterations: max_iters,
        residual: rr.sqrt() / b_norm,
    })
}
