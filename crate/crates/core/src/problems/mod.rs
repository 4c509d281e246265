//! Problem oracles for `min_x max_y f(x, y)`.

mod benchmarks;
mod config;
mod consistency;
mod finite_difference;
mod point;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, CompGradError, Result};

pub use benchmarks::{make_bilinear, make_quadratic_family, make_random_bilinear, Bilinear, QuadraticFamily};
pub use config::{BuiltProblem, Family, LipschitzSpec, ProblemSpec};
pub use consistency::{check_oracle_consistency, ConsistencyReport, ContractCheck};
pub use finite_difference::{
    make_finite_difference_oracle, FiniteDifferenceOracle, DEFAULT_GRADIENT_STEP, DEFAULT_HESSIAN_STEP,
};
pub use point::{DomainBox, IteratePoint};

/// First and second order information about `f` at a point.
///
/// `hess_xy` is the `m x n` block `d^2 f / dx dy`; `hess_yx` is the `n x m`
/// block and must equal its transpose. Hessian-vector products default to a
/// dense product, benchmark families override them with matrix-free forms.
///
/// Oracles are immutable after construction and may be shared across threads.
pub trait ProblemOracle: Send + Sync {
    /// `(m, n)`: sizes of the minimiser's and maximiser's variables.
    fn dims(&self) -> (usize, usize);

    fn value(&self, z: &IteratePoint) -> Result<f64>;

    /// `(grad_x f, grad_y f)`.
    fn grad(&self, z: &IteratePoint) -> Result<(DVector<f64>, DVector<f64>)>;

    fn hess_xx(&self, z: &IteratePoint) -> Result<DMatrix<f64>>;

    fn hess_yy(&self, z: &IteratePoint) -> Result<DMatrix<f64>>;

    fn hess_xy(&self, z: &IteratePoint) -> Result<DMatrix<f64>>;

    fn hess_yx(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
        Ok(self.hess_xy(z)?.transpose())
    }

    /// `hess_xy(z) * v` for `v` in `R^n`.
    fn hvp_xy(&self, z: &IteratePoint, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("hvp_xy vector", self.dims().1, v.len())?;
        Ok(self.hess_xy(z)? * v)
    }

    /// `hess_yx(z) * u` for `u` in `R^m`.
    fn hvp_yx(&self, z: &IteratePoint, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("hvp_yx vector", self.dims().0, u.len())?;
        Ok(self.hess_yx(z)? * u)
    }

    fn domain(&self) -> &DomainBox;

    fn lipschitz(&self) -> Option<LipschitzConstants> {
        None
    }

    /// True when every Hessian block is the same at every point of the domain.
    fn has_constant_hessian(&self) -> bool {
        false
    }

    /// Known saddle point, if the family has one in closed form.
    fn known_saddle_point(&self) -> Option<IteratePoint> {
        None
    }
}

/// Validates that `z` matches the oracle's `(m, n)`.
pub fn ensure_dims(oracle: &dyn ProblemOracle, z: &IteratePoint) -> Result<()> {
    let (m, n) = oracle.dims();
    check_dim("iterate x block", m, z.x.len())?;
    check_dim("iterate y block", n, z.y.len())
}

/// Lipschitz constants of `f` scoped to a compact box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzConstants {
    /// Function Lipschitz constant (bound on the gradient norm over the box).
    pub l: f64,
    /// Gradient Lipschitz constant.
    pub l_prime: f64,
    pub l_xx: f64,
    pub l_yy: f64,
    pub l_xy: f64,
    pub domain_box: DomainBox,
}

impl LipschitzConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("l", self.l),
            ("l_prime", self.l_prime),
            ("l_xx", self.l_xx),
            ("l_yy", self.l_yy),
            ("l_xy", self.l_xy),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(CompGradError::Config(format!(
                    "Lipschitz constant `{name}` must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}
