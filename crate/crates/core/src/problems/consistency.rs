use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{IteratePoint, ProblemOracle};
use crate::error::Result;

pub const HESS_XX_SYMMETRY: &str = "hess_xx symmetry";
pub const HESS_YY_SYMMETRY: &str = "hess_yy symmetry";
pub const HESS_YX_TRANSPOSE: &str = "hess_yx transpose";
pub const HVP_XY_DENSE: &str = "hvp_xy dense";
pub const HVP_YX_DENSE: &str = "hvp_yx dense";
pub const GRADIENT_FINITE_DIFFERENCE: &str = "gradient finite difference";

const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Serialize)]
pub struct ContractCheck {
    pub name: &'static str,
    pub max_defect: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub tol: f64,
    pub points: usize,
    pub checks: Vec<ContractCheck>,
    pub passed: bool,
}

impl ConsistencyReport {
    pub fn failed(&self) -> impl Iterator<Item = &ContractCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&ContractCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Mixed absolute/relative defect: `max|a - b| / max(1, max|b|)`.
pub(crate) fn mixed_defect(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let scale = b.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()));
    diff / scale
}

fn matrix_defect(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    mixed_defect(a.as_slice(), b.as_slice())
}

fn central_difference_gradient(oracle: &dyn ProblemOracle, z: &IteratePoint) -> Result<Vec<f64>> {
    let m = z.x.len();
    let mut out = Vec::with_capacity(z.len());
    for i in 0..z.len() {
        let mut plus = z.clone();
        let mut minus = z.clone();
        if i < m {
            plus.x[i] += FD_STEP;
            minus.x[i] -= FD_STEP;
        } else {
            plus.y[i - m] += FD_STEP;
            minus.y[i - m] -= FD_STEP;
        }
        out.push((oracle.value(&plus)? - oracle.value(&minus)?) / (2.0 * FD_STEP));
    }
    Ok(out)
}

/// Checks the oracle contracts at every point and reports the worst defect of
/// each. Defects are measured as `max|a - b| / max(1, max|b|)`.
pub fn check_oracle_consistency(
    oracle: &dyn ProblemOracle,
    points: &[IteratePoint],
    tol: f64,
) -> Result<ConsistencyReport> {
    let (m, n) = oracle.dims();
    let mut worst = [0.0_f64; 6];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for z in points {
        let hxx = oracle.hess_xx(z)?;
        let hyy = oracle.hess_yy(z)?;
        let hxy = oracle.hess_xy(z)?;
        let hyx = oracle.hess_yx(z)?;
        let v = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let u = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
        let (gx, gy) = oracle.grad(z)?;
        let grad: Vec<f64> = gx.iter().chain(gy.iter()).copied().collect();

        let defects = [
            matrix_defect(&hxx, &hxx.transpose()),
            matrix_defect(&hyy, &hyy.transpose()),
            matrix_defect(&hyx, &hxy.transpose()),
            mixed_defect(oracle.hvp_xy(z, &v)?.as_slice(), (&hxy * &v).as_slice()),
            mixed_defect(oracle.hvp_yx(z, &u)?.as_slice(), (&hyx * &u).as_slice()),
            mixed_defect(&grad, &central_difference_gradient(oracle, z)?),
        ];
        for (w, d) in worst.iter_mut().zip(defects) {
            *w = w.max(d);
        }
    }
    let names = [
        HESS_XX_SYMMETRY,
        HESS_YY_SYMMETRY,
        HESS_YX_TRANSPOSE,
        HVP_XY_DENSE,
        HVP_YX_DENSE,
        GRADIENT_FINITE_DIFFERENCE,
    ];
    let checks: Vec<ContractCheck> = names
        .iter()
        .zip(worst)
        .map(|(&name, max_defect)| ContractCheck {
            name,
            max_defect,
            passed: max_defect <= tol,
        })
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(ConsistencyReport {
        tol,
        points: points.len(),
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_quadratic_family, make_random_bilinear, DomainBox, LipschitzConstants};

    fn random_points(m: usize, n: usize, count: usize, seed: u64) -> Vec<IteratePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let domain = DomainBox::symmetric(m + n, 3.0);
        (0..count).map(|_| domain.sample(m, &mut rng)).collect()
    }

    #[test]
    fn analytic_bilinear_passes() {
        let f = make_random_bilinear(3, 4, 5).unwrap();
        let report = check_oracle_consistency(&f, &random_points(3, 4, 10, 1), 1e-8).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn analytic_quadratic_passes() {
        for k in [-2.0, 0.0, 2.0] {
            let f = make_quadratic_family(k).unwrap();
            let report = check_oracle_consistency(&f, &random_points(1, 1, 10, 2), 1e-8).unwrap();
            assert!(report.passed, "{report:?}");
        }
    }

    /// Reports a perturbed `hess_xy` while the cross block `hess_yx` stays correct.
    struct CorruptedCross<O>(O);

    impl<O: ProblemOracle> ProblemOracle for CorruptedCross<O> {
        fn dims(&self) -> (usize, usize) {
            self.0.dims()
        }
        fn value(&self, z: &IteratePoint) -> Result<f64> {
            self.0.value(z)
        }
        fn grad(&self, z: &IteratePoint) -> Result<(DVector<f64>, DVector<f64>)> {
            self.0.grad(z)
        }
        fn hess_xx(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
            self.0.hess_xx(z)
        }
        fn hess_yy(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
            self.0.hess_yy(z)
        }
        fn hess_xy(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
            Ok(self.0.hess_xy(z)?.add_scalar(0.5))
        }
        fn hess_yx(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
            self.0.hess_yx(z)
        }
        fn hvp_xy(&self, z: &IteratePoint, v: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(self.hess_xy(z)? * v)
        }
        fn domain(&self) -> &DomainBox {
            self.0.domain()
        }
        fn lipschitz(&self) -> Option<LipschitzConstants> {
            None
        }
    }

    #[test]
    fn corrupted_cross_block_is_named() {
        let f = CorruptedCross(make_random_bilinear(2, 2, 9).unwrap());
        let report = check_oracle_consistency(&f, &random_points(2, 2, 3, 3), 1e-8).unwrap();
        assert!(!report.passed);
        let failed: Vec<_> = report.failed().map(|c| c.name).collect();
        assert_eq!(failed, vec![HESS_YX_TRANSPOSE]);
    }
}
