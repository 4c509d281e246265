use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{CompGradError, Result};
use crate::problems::{ensure_dims, IteratePoint, ProblemOracle};

/// Eigenvalue extremes of the Hessian blocks at a point.
///
/// `lam_xy_*` refer to `hess_xy hess_yx` (`m x m`) and `lam_yx_*` to
/// `hess_yx hess_xy` (`n x n`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lam_xx_min: f64,
    pub lam_xx_max: f64,
    pub lam_yy_min: f64,
    pub lam_yy_max: f64,
    pub lam_xy_min: f64,
    pub lam_xy_max: f64,
    pub lam_yx_min: f64,
    pub lam_yx_max: f64,
    /// `max(lam_xx_max, -lam_yy_min)`.
    pub lam_bar_1: f64,
    /// `max(lam_xx_max, lam_yy_max)`.
    pub lam_bar_2: f64,
}

impl SpectralSummary {
    /// Builds a summary from raw extremes, filling in the derived bars.
    pub fn from_extremes(
        lam_xx: (f64, f64),
        lam_yy: (f64, f64),
        lam_xy: (f64, f64),
        lam_yx: (f64, f64),
    ) -> Self {
        Self {
            lam_xx_min: lam_xx.0,
            lam_xx_max: lam_xx.1,
            lam_yy_min: lam_yy.0,
            lam_yy_max: lam_yy.1,
            lam_xy_min: lam_xy.0,
            lam_xy_max: lam_xy.1,
            lam_yx_min: lam_yx.0,
            lam_yx_max: lam_yx.1,
            lam_bar_1: lam_xx.1.max(-lam_yy.0),
            lam_bar_2: lam_xx.1.max(lam_yy.1),
        }
    }
}

fn symmetric_extremes(h: DMatrix<f64>, name: &str) -> Result<(f64, f64)> {
    if h.iter().any(|v| !v.is_finite()) {
        return Err(CompGradError::Numeric(format!("{name} has non-finite entries")));
    }
    let sym = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| CompGradError::Numeric(format!("eigensolver did not converge on {name}")))?;
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    Ok((lo, hi))
}

/// Spectral summary of the Hessian blocks at `z`.
///
/// The Gram extremes come from the singular values of `hess_xy`; the larger
/// of the two Gram matrices picks up `|m - n|` zero eigenvalues.
pub fn spectral_summary(oracle: &dyn ProblemOracle, z: &IteratePoint) -> Result<SpectralSummary> {
    ensure_dims(oracle, z)?;
    if !oracle.domain().contains(z) {
        return Err(CompGradError::Config("spectral_summary point lies outside the oracle domain".into()));
    }
    let (m, n) = oracle.dims();
    let lam_xx = symmetric_extremes(oracle.hess_xx(z)?, "hess_xx")?;
    let lam_yy = symmetric_extremes(oracle.hess_yy(z)?, "hess_yy")?;

    let d = oracle.hess_xy(z)?;
    if d.iter().any(|v| !v.is_finite()) {
        return Err(CompGradError::Numeric("hess_xy has non-finite entries".into()));
    }
    let sv = d
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| CompGradError::Numeric("SVD did not converge on hess_xy".into()))?
        .singular_values;
    let sq_max = sv.iter().fold(0.0f64, |a, s| a.max(s * s));
    let sq_min = sv.iter().fold(f64::INFINITY, |a, s| a.min(s * s));
    let r = m.min(n);
    let lam_xy = (if m > r { 0.0 } else { sq_min }, sq_max);
    let lam_yx = (if n > r { 0.0 } else { sq_min }, sq_max);
    Ok(SpectralSummary::from_extremes(lam_xx, lam_yy, lam_xy, lam_yx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_bilinear, make_quadratic_family, make_random_bilinear};

    #[test]
    fn quadratic_family_summary() {
        let f = make_quadratic_family(2.0).unwrap();
        let s = spectral_summary(&f, &IteratePoint::zeros(1, 1)).unwrap();
        assert_eq!((s.lam_xx_min, s.lam_xx_max), (2.0, 2.0));
        assert_eq!((s.lam_yy_min, s.lam_yy_max), (-2.0, -2.0));
        assert!((s.lam_xy_min - 1.0).abs() < 1e-14 && (s.lam_xy_max - 1.0).abs() < 1e-14);
        assert_eq!((s.lam_bar_1, s.lam_bar_2), (2.0, 2.0));
    }

    #[test]
    fn bilinear_gram_extremes() {
        let f = make_bilinear(DMatrix::identity(2, 2)).unwrap();
        let s = spectral_summary(&f, &IteratePoint::zeros(2, 2)).unwrap();
        assert_eq!((s.lam_xx_min, s.lam_xx_max, s.lam_yy_min, s.lam_yy_max), (0.0, 0.0, 0.0, 0.0));
        assert!((s.lam_xy_min - 1.0).abs() < 1e-14 && (s.lam_xy_max - 1.0).abs() < 1e-14);

        let f = make_bilinear(DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0])).unwrap();
        let s = spectral_summary(&f, &IteratePoint::zeros(2, 2)).unwrap();
        assert!((s.lam_xy_min - 1.0).abs() < 1e-12 && (s.lam_xy_max - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rectangular_pads_larger_gram() {
        let f = make_random_bilinear(4, 5, 3).unwrap();
        let s = spectral_summary(&f, &IteratePoint::zeros(4, 5)).unwrap();
        assert_eq!(s.lam_yx_min, 0.0);
        assert!(s.lam_xy_min > 0.0);
        assert_eq!(s.lam_xy_max, s.lam_yx_max);
    }

    #[test]
    fn rejects_point_outside_domain() {
        let f = make_quadratic_family(1.0).unwrap();
        let z = IteratePoint::from_slices(&[100.0], &[0.0]).unwrap();
        assert!(spectral_summary(&f, &z).is_err());
    }
}
