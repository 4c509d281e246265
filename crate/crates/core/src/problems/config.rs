use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    make_bilinear, make_finite_difference_oracle, make_quadratic_family, make_random_bilinear, DomainBox,
    IteratePoint, LipschitzConstants, ProblemOracle, DEFAULT_GRADIENT_STEP, DEFAULT_HESSIAN_STEP,
};
use crate::error::{CompGradError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Bilinear,
    QuadraticK,
    RandomBilinear,
    Blackbox,
}

/// Lipschitz constants supplied in a config; they hold on the spec's domain box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzSpec {
    pub l: f64,
    pub l_prime: f64,
    #[serde(default)]
    pub l_xx: f64,
    #[serde(default)]
    pub l_yy: f64,
    #[serde(default)]
    pub l_xy: f64,
}

/// JSON problem description:
/// `{"family": ..., "params": {...}, "seed": int, "domain_box": [[lo, hi], ...]}`.
///
/// | family            | params                                                   |
/// |-------------------|----------------------------------------------------------|
/// | `bilinear`        | `{"matrix": [[a11, ...], ...]}` (rows of `A`)            |
/// | `quadratic_k`     | `{"k": k}`                                               |
/// | `random_bilinear` | `{"m": m, "n": n}`, entries drawn from `seed`            |
/// | `blackbox`        | `{"inner": <problem>, "step": h, "hessian_step": h2}`    |
///
/// A `blackbox` problem only uses the inner problem's value function; all
/// derivatives come from finite differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub family: Family,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub domain_box: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub lipschitz: Option<LipschitzSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BilinearParams {
    matrix: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadraticParams {
    k: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomBilinearParams {
    m: usize,
    n: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlackboxParams {
    inner: Box<ProblemSpec>,
    #[serde(default = "default_grad_step")]
    step: f64,
    #[serde(default = "default_hess_step")]
    hessian_step: f64,
}

fn default_grad_step() -> f64 {
    DEFAULT_GRADIENT_STEP
}

fn default_hess_step() -> f64 {
    DEFAULT_HESSIAN_STEP
}

/// A constructed oracle together with what the experiment harness logs about it.
#[derive(Clone)]
pub struct BuiltProblem {
    pub oracle: Arc<dyn ProblemOracle>,
    /// Supplied constants if the spec carries them, else the family's analytic ones.
    pub lipschitz: Option<LipschitzConstants>,
    /// Payoff matrix for bilinear families.
    pub matrix: Option<DMatrix<f64>>,
    pub family: Family,
}

impl std::fmt::Debug for BuiltProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BuiltProblem")
            .field("family", &self.family)
            .field("dims", &self.oracle.dims())
            .field("lipschitz", &self.lipschitz)
            .field("matrix", &self.matrix)
            .finish_non_exhaustive()
    }
}

fn params<T: for<'de> Deserialize<'de>>(value: &serde_json::Value) -> Result<T> {
    serde_json::from_value(value.clone()).map_err(|e| CompGradError::Config(format!("problem.params: {e}")))
}

impl ProblemSpec {
    pub fn build(&self) -> Result<BuiltProblem> {
        let domain = self
            .domain_box
            .as_ref()
            .map(|b| DomainBox::new(b.clone()))
            .transpose()
            .map_err(|e| CompGradError::Config(format!("problem.domain_box: {e}")))?;

        let (oracle, matrix): (Arc<dyn ProblemOracle>, Option<DMatrix<f64>>) = match self.family {
            Family::Bilinear => {
                let p: BilinearParams = params(&self.params)?;
                let rows = p.matrix.len();
                let cols = p.matrix.first().map_or(0, Vec::len);
                if rows == 0 || cols == 0 || p.matrix.iter().any(|r| r.len() != cols) {
                    return Err(CompGradError::Config(
                        "problem.params.matrix must be a non-empty rectangular list of rows".into(),
                    ));
                }
                let flat: Vec<f64> = p.matrix.concat();
                let mut f = make_bilinear(DMatrix::from_row_slice(rows, cols, &flat))?;
                if let Some(d) = domain {
                    f = f.with_domain(d)?;
                }
                let a = f.matrix().clone();
                (Arc::new(f), Some(a))
            }
            Family::QuadraticK => {
                let p: QuadraticParams = params(&self.params)?;
                let mut f = make_quadratic_family(p.k)?;
                if let Some(d) = domain {
                    f = f.with_domain(d)?;
                }
                (Arc::new(f), None)
            }
            Family::RandomBilinear => {
                let p: RandomBilinearParams = params(&self.params)?;
                let seed = self
                    .seed
                    .ok_or_else(|| CompGradError::Config("problem.seed is required for random_bilinear".into()))?;
                let mut f = make_random_bilinear(p.m, p.n, seed)?;
                if let Some(d) = domain {
                    f = f.with_domain(d)?;
                }
                let a = f.matrix().clone();
                (Arc::new(f), Some(a))
            }
            Family::Blackbox => {
                let p: BlackboxParams = params(&self.params)?;
                let inner = p.inner.build()?;
                let dims = inner.oracle.dims();
                let inner_oracle = inner.oracle.clone();
                let value_fn = move |z: &IteratePoint| inner_oracle.value(z).unwrap_or(f64::NAN);
                let mut f = make_finite_difference_oracle(value_fn, dims, p.step)?.with_hessian_step(p.hessian_step)?;
                if let Some(d) = domain {
                    f = f.with_domain(d)?;
                }
                (Arc::new(f), None)
            }
        };

        let lipschitz = match &self.lipschitz {
            Some(spec) => {
                let constants = LipschitzConstants {
                    l: spec.l,
                    l_prime: spec.l_prime,
                    l_xx: spec.l_xx,
                    l_yy: spec.l_yy,
                    l_xy: spec.l_xy,
                    domain_box: oracle.domain().clone(),
                };
                constants
                    .validate()
                    .map_err(|e| CompGradError::Config(format!("problem.lipschitz: {e}")))?;
                Some(constants)
            }
            None => oracle.lipschitz(),
        };

        Ok(BuiltProblem {
            oracle,
            lipschitz,
            matrix,
            family: self.family,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> ProblemSpec {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn builds_each_family() {
        let b = spec(r#"{"family":"bilinear","params":{"matrix":[[1,2,3],[4,5,6]]}}"#).build().unwrap();
        assert_eq!(b.oracle.dims(), (2, 3));
        assert_eq!(b.matrix.unwrap()[(1, 2)], 6.0);

        let q = spec(r#"{"family":"quadratic_k","params":{"k":-2},"domain_box":[[-1,1],[-1,1]]}"#)
            .build()
            .unwrap();
        assert_eq!(q.oracle.dims(), (1, 1));
        assert_eq!(q.oracle.domain().bounds()[0], (-1.0, 1.0));

        let r = spec(r#"{"family":"random_bilinear","params":{"m":4,"n":5},"seed":7}"#).build().unwrap();
        assert_eq!(r.matrix.unwrap().shape(), (4, 5));

        let bb = spec(r#"{"family":"blackbox","params":{"inner":{"family":"quadratic_k","params":{"k":2}}}}"#)
            .build()
            .unwrap();
        assert!(bb.lipschitz.is_none());
        let z = IteratePoint::from_slices(&[1.0], &[1.0]).unwrap();
        let (gx, _) = bb.oracle.grad(&z).unwrap();
        assert!((gx[0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn errors_name_the_field() {
        let err = spec(r#"{"family":"quadratic_k","params":{}}"#).build().unwrap_err();
        assert!(err.to_string().contains("problem.params"), "{err}");
        let err = spec(r#"{"family":"random_bilinear","params":{"m":2,"n":2}}"#).build().unwrap_err();
        assert!(err.to_string().contains("problem.seed"), "{err}");
        let err = spec(r#"{"family":"quadratic_k","params":{"k":1},"domain_box":[[1,-1],[0,1]]}"#)
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("problem.domain_box"), "{err}");
    }

    #[test]
    fn supplied_lipschitz_overrides_analytic() {
        let b = spec(r#"{"family":"quadratic_k","params":{"k":2},"lipschitz":{"l":3,"l_prime":2,"l_xy":0.5}}"#)
            .build()
            .unwrap();
        let c = b.lipschitz.unwrap();
        assert_eq!((c.l, c.l_prime, c.l_xy), (3.0, 2.0, 0.5));
    }
}
