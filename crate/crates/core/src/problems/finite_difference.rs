use std::fmt;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use super::{ensure_dims, DomainBox, IteratePoint, LipschitzConstants, ProblemOracle};
use crate::error::{check_dim, CompGradError, Result};

pub const DEFAULT_GRADIENT_STEP: f64 = 1e-5;
pub const DEFAULT_HESSIAN_STEP: f64 = 1e-4;

/// Oracle for a value-only objective. Gradients use central differences with
/// the gradient step; Hessian blocks use central differences of those
/// gradients with the Hessian step. `hess_xx` and `hess_yy` are symmetrised,
/// the cross blocks are computed independently of each other.
pub struct FiniteDifferenceOracle<F> {
    value_fn: F,
    dims: (usize, usize),
    grad_step: f64,
    hess_step: f64,
    domain: DomainBox,
    lipschitz: Option<LipschitzConstants>,
}

impl<F> fmt::Debug for FiniteDifferenceOracle<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteDifferenceOracle")
            .field("dims", &self.dims)
            .field("grad_step", &self.grad_step)
            .field("hess_step", &self.hess_step)
            .finish_non_exhaustive()
    }
}

/// Wraps `value_fn` with gradient step `step` and the default Hessian step.
pub fn make_finite_difference_oracle<F>(
    value_fn: F,
    dims: (usize, usize),
    step: f64,
) -> Result<FiniteDifferenceOracle<F>>
where
    F: Fn(&IteratePoint) -> f64 + Send + Sync,
{
    if dims.0 == 0 || dims.1 == 0 {
        return Err(CompGradError::Config(format!("oracle dimensions must be positive, got {dims:?}")));
    }
    validate_step("step", step)?;
    Ok(FiniteDifferenceOracle {
        value_fn,
        dims,
        grad_step: step,
        hess_step: DEFAULT_HESSIAN_STEP,
        domain: DomainBox::default_for(dims.0, dims.1),
        lipschitz: None,
    })
}

fn validate_step(name: &str, step: f64) -> Result<()> {
    if step.is_finite() && step > 0.0 {
        Ok(())
    } else {
        Err(CompGradError::Config(format!("finite-difference {name} must be positive, got {step}")))
    }
}

impl<F> FiniteDifferenceOracle<F>
where
    F: Fn(&IteratePoint) -> f64 + Send + Sync,
{
    pub fn with_hessian_step(mut self, step: f64) -> Result<Self> {
        validate_step("Hessian step", step)?;
        self.hess_step = step;
        Ok(self)
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Result<Self> {
        check_dim("finite-difference domain box", self.dims.0 + self.dims.1, domain.dim())?;
        self.domain = domain;
        Ok(self)
    }

    pub fn with_lipschitz(mut self, constants: LipschitzConstants) -> Result<Self> {
        constants.validate()?;
        self.lipschitz = Some(constants);
        Ok(self)
    }

    fn eval(&self, z: &IteratePoint) -> Result<f64> {
        let v = (self.value_fn)(z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CompGradError::Evaluation {
                point: Box::new(z.clone()),
            })
        }
    }

    /// Central-difference partials of `f` w.r.t. the joint coordinates in `coords`.
    fn grad_block(&self, z: &IteratePoint, coords: Range<usize>, h: f64) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(coords.len());
        for (k, i) in coords.enumerate() {
            let plus = self.eval(&shifted(z, i, h))?;
            let minus = self.eval(&shifted(z, i, -h))?;
            out[k] = (plus - minus) / (2.0 * h);
        }
        Ok(out)
    }

    /// Entry `(r, c)` approximates `d/dz_rows[r] (d f / dz_cols[c])`.
    fn hessian_block(&self, z: &IteratePoint, rows: Range<usize>, cols: Range<usize>) -> Result<DMatrix<f64>> {
        let h = self.hess_step;
        let mut out = DMatrix::zeros(rows.len(), cols.len());
        for (r, i) in rows.enumerate() {
            let plus = self.grad_block(&shifted(z, i, h), cols.clone(), self.grad_step)?;
            let minus = self.grad_block(&shifted(z, i, -h), cols.clone(), self.grad_step)?;
            out.row_mut(r).copy_from(&((plus - minus) / (2.0 * h)).transpose());
        }
        Ok(out)
    }

    fn x_range(&self) -> Range<usize> {
        0..self.dims.0
    }

    fn y_range(&self) -> Range<usize> {
        self.dims.0..self.dims.0 + self.dims.1
    }
}

fn shifted(z: &IteratePoint, joint_index: usize, h: f64) -> IteratePoint {
    let mut p = z.clone();
    let m = p.x.len();
    if joint_index < m {
        p.x[joint_index] += h;
    } else {
        p.y[joint_index - m] += h;
    }
    p
}

fn symmetrize(mut a: DMatrix<f64>) -> DMatrix<f64> {
    let t = a.transpose();
    a += t;
    a * 0.5
}

impl<F> ProblemOracle for FiniteDifferenceOracle<F>
where
    F: Fn(&IteratePoint) -> f64 + Send + Sync,
{
    fn dims(&self) -> (usize, usize) {
        self.dims
    }

    fn value(&self, z: &IteratePoint) -> Result<f64> {
        ensure_dims(self, z)?;
        self.eval(z)
    }

    fn grad(&self, z: &IteratePoint) -> Result<(DVector<f64>, DVector<f64>)> {
        ensure_dims(self, z)?;
        Ok((
            self.grad_block(z, self.x_range(), self.grad_step)?,
            self.grad_block(z, self.y_range(), self.grad_step)?,
        ))
    }

    fn hess_xx(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
        ensure_dims(self, z)?;
        Ok(symmetrize(self.hessian_block(z, self.x_range(), self.x_range())?))
    }

    fn hess_yy(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
        ensure_dims(self, z)?;
        Ok(symmetrize(self.hessian_block(z, self.y_range(), self.y_range())?))
    }

    fn hess_xy(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
        ensure_dims(self, z)?;
        self.hessian_block(z, self.x_range(), self.y_range())
    }

    fn hess_yx(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
        ensure_dims(self, z)?;
        self.hessian_block(z, self.y_range(), self.x_range())
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn lipschitz(&self) -> Option<LipschitzConstants> {
        self.lipschitz.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_bilinear, make_quadratic_family};

    fn pt(x: f64, y: f64) -> IteratePoint {
        IteratePoint::from_slices(&[x], &[y]).unwrap()
    }

    #[test]
    fn wraps_bilinear_gradient() {
        let fd = make_finite_difference_oracle(|z: &IteratePoint| z.x[0] * z.y[0], (1, 1), 1e-5).unwrap();
        let (gx, gy) = fd.grad(&pt(1.0, 1.0)).unwrap();
        assert!((gx[0] - 1.0).abs() < 1e-8);
        assert!((gy[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn wraps_quadratic_hessian_blocks() {
        let f2 = make_quadratic_family(2.0).unwrap();
        let fd = make_finite_difference_oracle(move |z: &IteratePoint| f2.value(z).unwrap(), (1, 1), 1e-4).unwrap();
        let z = pt(0.3, -0.7);
        assert!((fd.hess_xx(&z).unwrap()[(0, 0)] - 2.0).abs() < 1e-4);
        assert!((fd.hess_yy(&z).unwrap()[(0, 0)] + 2.0).abs() < 1e-4);
        assert!((fd.hess_xy(&z).unwrap()[(0, 0)] - 1.0).abs() < 1e-4);
        assert!((fd.hess_yx(&z).unwrap()[(0, 0)] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn constant_objective_has_zero_derivatives() {
        let fd = make_finite_difference_oracle(|_: &IteratePoint| 5.0, (2, 3), DEFAULT_GRADIENT_STEP).unwrap();
        let z = IteratePoint::from_slices(&[0.1, -0.4], &[2.0, 3.0, -1.0]).unwrap();
        let (gx, gy) = fd.grad(&z).unwrap();
        assert!(gx.iter().chain(gy.iter()).all(|&v| v == 0.0));
        for h in [fd.hess_xx(&z), fd.hess_yy(&z), fd.hess_xy(&z), fd.hess_yx(&z)] {
            assert!(h.unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn non_finite_value_reports_probe_point() {
        let fd = make_finite_difference_oracle(
            |z: &IteratePoint| if z.x[0] > 0.0 { f64::NAN } else { 0.0 },
            (1, 1),
            1e-5,
        )
        .unwrap();
        match fd.grad(&pt(0.0, 0.0)) {
            Err(CompGradError::Evaluation { point }) => assert!(point.x[0] > 0.0),
            other => panic!("expected evaluation error, got {other:?}"),
        }
    }

    #[test]
    fn cross_blocks_match_dense_bilinear() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, -1.0]);
        let exact = make_bilinear(a.clone()).unwrap();
        let fd = make_finite_difference_oracle(move |z: &IteratePoint| exact.value(z).unwrap(), (2, 3), 1e-5).unwrap();
        let z = IteratePoint::from_slices(&[0.2, -0.1], &[1.0, 0.4, -0.3]).unwrap();
        assert!((fd.hess_xy(&z).unwrap() - &a).amax() < 1e-5);
        assert!((fd.hess_yx(&z).unwrap() - a.transpose()).amax() < 1e-5);
    }

    #[test]
    fn rejects_bad_steps() {
        assert!(make_finite_difference_oracle(|_: &IteratePoint| 0.0, (1, 1), 0.0).is_err());
        let fd = make_finite_difference_oracle(|_: &IteratePoint| 0.0, (1, 1), 1e-5).unwrap();
        assert!(fd.with_hessian_step(-1.0).is_err());
    }
}
