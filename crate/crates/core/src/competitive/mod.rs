//! The competitive gradient `g_alpha` and Euclidean mirror primitives.
//!
//! `g_alpha` solves the block system
//!
//! ```text
//! [ I            alpha * D_xy ] [g_x]   [ grad_x f ]
//! [ -alpha * D_yx           I ] [g_y] = [-grad_y f ]
//! ```
//!
//! which decouples into two SPD systems:
//!
//! ```text
//! (I + alpha^2 D_xy D_yx) g_x = grad_x f + alpha D_xy grad_y f
//! (I + alpha^2 D_yx D_xy) g_y = -grad_y f + alpha D_yx grad_x f
//! ```
//!
//! Both are `I` plus a scaled Gram matrix, so they are always solvable; the
//! dense route factorises them with Cholesky and the matrix-free route runs
//! conjugate gradient on Hessian-vector products.

mod bregman;
mod cg;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CompGradError, Result};
use crate::problems::{ensure_dims, IteratePoint, ProblemOracle};

pub use bregman::{bregman_divergence, proximal_map, EuclideanPotential, MirrorPotential, ProxStep};

/// Problems with `m + n` up to this size use the dense route under [`SolveMethod::Auto`].
pub const DENSE_SIZE_LIMIT: usize = 256;
pub const DEFAULT_CG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Dense for `m + n <= 256`, matrix-free above.
    #[default]
    Auto,
    Dense,
    MatrixFree,
}

impl SolveMethod {
    pub fn resolve(self, size: usize) -> SolveMethod {
        match self {
            SolveMethod::Auto if size <= DENSE_SIZE_LIMIT => SolveMethod::Dense,
            SolveMethod::Auto => SolveMethod::MatrixFree,
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSettings {
    pub method: SolveMethod,
    /// Relative residual target for conjugate gradient.
    pub cg_tol: f64,
    /// Per-system iteration budget; `None` means `m + n + 50`.
    pub cg_max_iters: Option<usize>,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            method: SolveMethod::Auto,
            cg_tol: DEFAULT_CG_TOL,
            cg_max_iters: None,
        }
    }
}

impl SolveSettings {
    pub fn dense() -> Self {
        Self {
            method: SolveMethod::Dense,
            ..Self::default()
        }
    }

    pub fn matrix_free(cg_tol: f64) -> Self {
        Self {
            method: SolveMethod::MatrixFree,
            cg_tol,
            cg_max_iters: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cg_tol.is_finite() && self.cg_tol > 0.0) {
            return Err(CompGradError::Config(format!("solve.cg_tol must be positive, got {}", self.cg_tol)));
        }
        if self.cg_max_iters == Some(0) {
            return Err(CompGradError::Config("solve.cg_max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// `g_alpha` at a point. Steps move by `-eta * (gx, gy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetitiveGradient {
    pub gx: DVector<f64>,
    pub gy: DVector<f64>,
    pub alpha: f64,
    /// Route actually taken (never `Auto`).
    pub method: SolveMethod,
    /// Worst relative residual `||M g - b|| / ||b||` of the two SPD systems.
    pub residual: f64,
    /// Total conjugate gradient iterations over both systems (0 for dense).
    pub cg_iterations: usize,
}

impl CompetitiveGradient {
    pub fn norm(&self) -> f64 {
        (self.gx.norm_squared() + self.gy.norm_squared()).sqrt()
    }

    pub fn as_point(&self) -> IteratePoint {
        IteratePoint {
            x: self.gx.clone(),
            y: self.gy.clone(),
        }
    }

    pub fn joint(&self) -> DVector<f64> {
        self.as_point().joint()
    }

    /// `<g, v>` with `v` split the same way as `(gx, gy)`.
    pub fn dot(&self, v: &IteratePoint) -> f64 {
        self.gx.dot(&v.x) + self.gy.dot(&v.y)
    }
}

fn relative_residual(residual: &DVector<f64>, rhs: &DVector<f64>) -> f64 {
    let b = rhs.norm();
    if b == 0.0 {
        residual.norm()
    } else {
        residual.norm() / b
    }
}

/// Computes `g_alpha(z)`. At `alpha = 0` this is exactly `(grad_x f, -grad_y f)`
/// and no Hessian information is requested.
pub fn competitive_gradient(
    oracle: &dyn ProblemOracle,
    z: &IteratePoint,
    alpha: f64,
    settings: &SolveSettings,
) -> Result<CompetitiveGradient> {
    if !alpha.is_finite() {
        return Err(CompGradError::Config(format!("alpha must be finite, got {alpha}")));
    }
    settings.validate()?;
    ensure_dims(oracle, z)?;
    let (m, n) = oracle.dims();
    let method = settings.method.resolve(m + n);
    let (fx, fy) = oracle.grad(z)?;

    if alpha == 0.0 {
        return Ok(CompetitiveGradient {
            gx: fx,
            gy: -fy,
            alpha,
            method,
            residual: 0.0,
            cg_iterations: 0,
        });
    }

    let alpha_sq = alpha * alpha;
    match method {
        SolveMethod::Dense => {
            let d = oracle.hess_xy(z)?;
            let dt = d.transpose();
            let mx = DMatrix::identity(m, m) + (&d * &dt) * alpha_sq;
            let my = DMatrix::identity(n, n) + (&dt * &d) * alpha_sq;
            let bx = &fx + (&d * &fy) * alpha;
            let by = -&fy + (&dt * &fx) * alpha;
            let gx = mx
                .clone()
                .cholesky()
                .ok_or_else(|| CompGradError::Numeric("Cholesky failed on I + alpha^2 D_xy D_yx".into()))?
                .solve(&bx);
            let gy = my
                .clone()
                .cholesky()
                .ok_or_else(|| CompGradError::Numeric("Cholesky failed on I + alpha^2 D_yx D_xy".into()))?
                .solve(&by);
            let residual = relative_residual(&(&mx * &gx - &bx), &bx).max(relative_residual(&(&my * &gy - &by), &by));
            Ok(CompetitiveGradient {
                gx,
                gy,
                alpha,
                method,
                residual,
                cg_iterations: 0,
            })
        }
        SolveMethod::MatrixFree | SolveMethod::Auto => {
            let budget = settings.cg_max_iters.unwrap_or(m + n + 50);
            let apply_x = |v: &DVector<f64>| -> Result<DVector<f64>> {
                let inner = oracle.hvp_yx(z, v)?;
                Ok(v + oracle.hvp_xy(z, &inner)? * alpha_sq)
            };
            let apply_y = |w: &DVector<f64>| -> Result<DVector<f64>> {
                let inner = oracle.hvp_xy(z, w)?;
                Ok(w + oracle.hvp_yx(z, &inner)? * alpha_sq)
            };
            let bx = &fx + oracle.hvp_xy(z, &fy)? * alpha;
            let by = -&fy + oracle.hvp_yx(z, &fx)? * alpha;
            let sx = cg::conjugate_gradient(apply_x, &bx, settings.cg_tol, budget)?;
            let sy = cg::conjugate_gradient(apply_y, &by, settings.cg_tol, budget)?;
            let residual = relative_residual(&(apply_x(&sx.solution)? - &bx), &bx)
                .max(relative_residual(&(apply_y(&sy.solution)? - &by), &by));
            Ok(CompetitiveGradient {
                gx: sx.solution,
                gy: sy.solution,
                alpha,
                method: SolveMethod::MatrixFree,
                residual,
                cg_iterations: sx.iterations + sy.iterations,
            })
        }
    }
}

/// Residual of the coupled block system for a computed `g`:
/// `||[[I, aD], [-aD^T, I]] g - (grad_x f, -grad_y f)||`, relative to the
/// right-hand side norm (absolute when that is zero).
pub fn block_system_residual(oracle: &dyn ProblemOracle, z: &IteratePoint, g: &CompetitiveGradient) -> Result<f64> {
    ensure_dims(oracle, z)?;
    let (fx, fy) = oracle.grad(z)?;
    let rx = &g.gx + oracle.hvp_xy(z, &g.gy)? * g.alpha - &fx;
    let ry = &g.gy - oracle.hvp_yx(z, &g.gx)? * g.alpha + &fy;
    let res = (rx.norm_squared() + ry.norm_squared()).sqrt();
    let rhs = (fx.norm_squared() + fy.norm_squared()).sqrt();
    Ok(if rhs == 0.0 { res } else { res / rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_bilinear, make_quadratic_family, make_random_bilinear};

    fn pt(x: &[f64], y: &[f64]) -> IteratePoint {
        IteratePoint::from_slices(x, y).unwrap()
    }

    #[test]
    fn scalar_bilinear_hand_solve() {
        // [[1, a], [-a, 1]] g = (1, -1) at a = 1 gives g = (1, 0).
        let f = make_bilinear(DMatrix::from_element(1, 1, 1.0)).unwrap();
        let z = pt(&[1.0], &[1.0]);
        for settings in [SolveSettings::dense(), SolveSettings::matrix_free(1e-12)] {
            let g = competitive_gradient(&f, &z, 1.0, &settings).unwrap();
            assert!((g.gx[0] - 1.0).abs() < 1e-12);
            assert!(g.gy[0].abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_zero_is_plain_gradient_field() {
        let f = make_random_bilinear(3, 2, 4).unwrap();
        let z = pt(&[0.3, -1.0, 2.0], &[0.5, 0.25]);
        let g = competitive_gradient(&f, &z, 0.0, &SolveSettings::default()).unwrap();
        let (fx, fy) = f.grad(&z).unwrap();
        assert_eq!(g.gx, fx);
        assert_eq!(g.gy, -fy);
        assert_eq!(g.residual, 0.0);
    }

    #[test]
    fn stationary_point_gives_zero() {
        let f = make_quadratic_family(-2.0).unwrap();
        let z = IteratePoint::zeros(1, 1);
        for settings in [SolveSettings::dense(), SolveSettings::matrix_free(1e-10)] {
            let g = competitive_gradient(&f, &z, 0.7, &settings).unwrap();
            assert_eq!(g.norm(), 0.0);
        }
    }

    #[test]
    fn auto_resolves_by_size() {
        assert_eq!(SolveMethod::Auto.resolve(256), SolveMethod::Dense);
        assert_eq!(SolveMethod::Auto.resolve(257), SolveMethod::MatrixFree);
        let f = make_random_bilinear(200, 100, 1).unwrap();
        let z = IteratePoint::new(DVector::from_element(200, 0.1), DVector::from_element(100, -0.2)).unwrap();
        let g = competitive_gradient(&f, &z, 0.5, &SolveSettings::default()).unwrap();
        assert_eq!(g.method, SolveMethod::MatrixFree);
        assert!(g.residual <= DEFAULT_CG_TOL);
    }

    #[test]
    fn cg_budget_exhaustion_is_an_error() {
        let f = make_random_bilinear(6, 6, 2).unwrap();
        let z = IteratePoint::new(DVector::from_element(6, 1.0), DVector::from_element(6, 1.0)).unwrap();
        let settings = SolveSettings {
            method: SolveMethod::MatrixFree,
            cg_tol: 1e-14,
            cg_max_iters: Some(1),
        };
        assert!(matches!(
            competitive_gradient(&f, &z, 3.0, &settings),
            Err(CompGradError::Solve { .. })
        ));
    }

    #[test]
    fn invalid_settings_rejected() {
        let f = make_quadratic_family(1.0).unwrap();
        let z = pt(&[1.0], &[1.0]);
        let bad = SolveSettings {
            cg_tol: 0.0,
            ..SolveSettings::default()
        };
        assert!(competitive_gradient(&f, &z, 1.0, &bad).is_err());
        assert!(competitive_gradient(&f, &z, f64::NAN, &SolveSettings::default()).is_err());
    }

    #[test]
    fn block_residual_small_for_both_routes() {
        let f = make_random_bilinear(4, 5, 3).unwrap();
        let z = pt(&[1.0, -0.5, 0.25, 2.0], &[0.1, 0.2, -0.3, 0.4, 1.5]);
        for settings in [SolveSettings::dense(), SolveSettings::matrix_free(1e-12)] {
            let g = competitive_gradient(&f, &z, 2.0, &settings).unwrap();
            assert!(block_system_residual(&f, &z, &g).unwrap() < 1e-9);
        }
    }
}
