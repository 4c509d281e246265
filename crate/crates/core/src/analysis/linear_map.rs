use nalgebra::{DMatrix, Schur};

use crate::error::{CompGradError, Result};
use crate::problems::{IteratePoint, ProblemOracle};
use crate::solvers::Algorithm;

/// Exact one-iteration map `z_{n+1} = M z_n` of a stepper on a problem whose
/// gradient field is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStepMap {
    pub matrix: DMatrix<f64>,
    pub spectral_radius: f64,
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(CompGradError::Dimension {
            context: "spectral radius",
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| CompGradError::Numeric("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().fold(0.0, |a, c| a.max(c.norm())))
}

/// Builds the step matrix of `algorithm` for a constant-Hessian problem with
/// a stationary point at the origin.
///
/// With `J = [[H_xx, H_xy], [-H_yx, -H_yy]]` and
/// `B = [[I, a H_xy], [-a H_yx, I]]`, `g_a(z) = B^{-1} J z =: G z`. Single-step
/// methods give `I - eta G`; the two-stage methods give
/// `I - eta G + eta^2 G^2`. OMDA's domain projection is not modelled.
pub fn linear_step_matrix(
    oracle: &dyn ProblemOracle,
    algorithm: Algorithm,
    alpha: f64,
    eta: f64,
) -> Result<LinearStepMap> {
    if !oracle.has_constant_hessian() {
        return Err(CompGradError::Unsupported(
            "linear_step_matrix needs an oracle with constant Hessian blocks".into(),
        ));
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(CompGradError::Config(format!("step size eta must be positive, got {eta}")));
    }
    let (m, n) = oracle.dims();
    let origin = IteratePoint::zeros(m, n);
    let (gx, gy) = oracle.grad(&origin)?;
    if gx.amax() > 0.0 || gy.amax() > 0.0 {
        return Err(CompGradError::Unsupported(
            "linear_step_matrix needs a vanishing gradient at the origin (affine maps are not supported)".into(),
        ));
    }

    let hxx = oracle.hess_xx(&origin)?;
    let hyy = oracle.hess_yy(&origin)?;
    let hxy = oracle.hess_xy(&origin)?;
    let hyx = oracle.hess_yx(&origin)?;
    let size = m + n;
    let mut j = DMatrix::zeros(size, size);
    j.view_mut((0, 0), (m, m)).copy_from(&hxx);
    j.view_mut((0, m), (m, n)).copy_from(&hxy);
    j.view_mut((m, 0), (n, m)).copy_from(&(-&hyx));
    j.view_mut((m, m), (n, n)).copy_from(&(-&hyy));

    let a = algorithm.effective_alpha(alpha, eta);
    let g = if a == 0.0 {
        j
    } else {
        let mut b = DMatrix::identity(size, size);
        b.view_mut((0, m), (m, n)).copy_from(&(&hxy * a));
        b.view_mut((m, 0), (n, m)).copy_from(&(&hyx * -a));
        b.lu()
            .solve(&j)
            .ok_or_else(|| CompGradError::Numeric("block system matrix is singular".into()))?
    };

    let id = DMatrix::identity(size, size);
    let matrix = if algorithm.is_optimistic() {
        &id - &g * eta + (&g * &g) * (eta * eta)
    } else {
        &id - &g * eta
    };
    let spectral_radius = spectral_radius(&matrix)?;
    Ok(LinearStepMap { matrix, spectral_radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_bilinear, make_quadratic_family, make_finite_difference_oracle};
    use nalgebra::dmatrix;

    fn xy() -> impl ProblemOracle {
        make_bilinear(DMatrix::from_element(1, 1, 1.0)).unwrap()
    }

    #[test]
    fn gda_on_xy() {
        let map = linear_step_matrix(&xy(), Algorithm::GDA, 0.0, 0.1).unwrap();
        assert!((map.matrix.clone() - dmatrix![1.0, -0.1; 0.1, 1.0]).amax() < 1e-15);
        assert!((map.spectral_radius - 1.01f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn cgo_on_xy() {
        let map = linear_step_matrix(&xy(), Algorithm::CGO, 1.0, 0.2).unwrap();
        let expected = DMatrix::identity(2, 2) - dmatrix![1.0, 1.0; -1.0, 1.0] * 0.1;
        assert!((map.matrix.clone() - expected).amax() < 1e-15);
        assert!((map.spectral_radius.powi(2) - 0.82).abs() < 1e-14);
    }

    #[test]
    fn quadratic_family_threshold() {
        let f = make_quadratic_family(-2.0).unwrap();
        let stable = linear_step_matrix(&f, Algorithm::CGO, 3.0, 0.05).unwrap();
        let unstable = linear_step_matrix(&f, Algorithm::CGO, 1.0, 0.05).unwrap();
        assert!(stable.spectral_radius < 1.0);
        assert!(unstable.spectral_radius > 1.0);
    }

    #[test]
    fn rejects_unsupported_inputs() {
        assert!(linear_step_matrix(&xy(), Algorithm::GDA, 0.0, 0.0).is_err());
        let fd = make_finite_difference_oracle(|z: &IteratePoint| z.x[0] * z.y[0], (1, 1), 1e-5).unwrap();
        let err = linear_step_matrix(&fd, Algorithm::GDA, 0.0, 0.1).unwrap_err();
        assert!(matches!(err, CompGradError::Unsupported(_)));
    }
}
