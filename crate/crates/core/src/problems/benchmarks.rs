use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ensure_dims, DomainBox, IteratePoint, LipschitzConstants, ProblemOracle};
use crate::error::{check_dim, CompGradError, Result};

/// `f(x, y) = x^T A y`.
#[derive(Debug, Clone)]
pub struct Bilinear {
    a: DMatrix<f64>,
    domain: DomainBox,
}

pub fn make_bilinear(a: DMatrix<f64>) -> Result<Bilinear> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(CompGradError::Config("bilinear matrix must be at least 1x1".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(CompGradError::Config("bilinear matrix has non-finite entries".into()));
    }
    let domain = DomainBox::default_for(a.nrows(), a.ncols());
    Ok(Bilinear { a, domain })
}

/// Bilinear game with `a_ij ~ N(0, 1)`, drawn row by row from a ChaCha8
/// stream seeded with `seed`.
pub fn make_random_bilinear(m: usize, n: usize, seed: u64) -> Result<Bilinear> {
    if m == 0 || n == 0 {
        return Err(CompGradError::Config(format!(
            "random bilinear dimensions must be positive, got {m}x{n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<f64> = (0..m * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    make_bilinear(DMatrix::from_row_slice(m, n, &entries))
}

impl Bilinear {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Result<Self> {
        check_dim("bilinear domain box", self.a.nrows() + self.a.ncols(), domain.dim())?;
        self.domain = domain;
        Ok(self)
    }
}

impl ProblemOracle for Bilinear {
    fn dims(&self) -> (usize, usize) {
        (self.a.nrows(), self.a.ncols())
    }

    fn value(&self, z: &IteratePoint) -> Result<f64> {
        ensure_dims(self, z)?;
        Ok(z.x.dot(&(&self.a * &z.y)))
    }

    fn grad(&self, z: &IteratePoint) -> Result<(DVector<f64>, DVector<f64>)> {
        ensure_dims(self, z)?;
        Ok((&self.a * &z.y, self.a.tr_mul(&z.x)))
    }

    fn hess_xx(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
        ensure_dims(self, z)?;
        Ok(DMatrix::zeros(self.a.nrows(), self.a.nrows()))
    }

    fn hess_yy(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
        ensure_dims(self, z)?;
        Ok(DMatrix::zeros(self.a.ncols(), self.a.ncols()))
    }

    fn hess_xy(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
        ensure_dims(self, z)?;
        Ok(self.a.clone())
    }

    fn hvp_xy(&self, z: &IteratePoint, v: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_dims(self, z)?;
        check_dim("hvp_xy vector", self.a.ncols(), v.len())?;
        Ok(&self.a * v)
    }

    fn hvp_yx(&self, z: &IteratePoint, u: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_dims(self, z)?;
        check_dim("hvp_yx vector", self.a.nrows(), u.len())?;
        Ok(self.a.tr_mul(u))
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    /// `L' = sigma_max(A)`, Hessian constants zero, and `L` bounded by
    /// `sigma_max(A)` times the largest point norm in the box.
    fn lipschitz(&self) -> Option<LipschitzConstants> {
        let sigma_max = self
            .a
            .singular_values()
            .iter()
            .copied()
            .fold(0.0_f64, f64::max);
        Some(LipschitzConstants {
            l: sigma_max * self.domain.max_norm(),
            l_prime: sigma_max,
            l_xx: 0.0,
            l_yy: 0.0,
            l_xy: 0.0,
            domain_box: self.domain.clone(),
        })
    }

    fn has_constant_hessian(&self) -> bool {
        true
    }

    fn known_saddle_point(&self) -> Option<IteratePoint> {
        Some(IteratePoint::zeros(self.a.nrows(), self.a.ncols()))
    }
}

/// `f_k(x, y) = (k/2)(x^2 - y^2) + x y` on scalars.
#[derive(Debug, Clone)]
pub struct QuadraticFamily {
    k: f64,
    domain: DomainBox,
}

pub fn make_quadratic_family(k: f64) -> Result<QuadraticFamily> {
    if !k.is_finite() {
        return Err(CompGradError::Config(format!("quadratic family parameter k must be finite, got {k}")));
    }
    Ok(QuadraticFamily {
        k,
        domain: DomainBox::default_for(1, 1),
    })
}

impl QuadraticFamily {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Result<Self> {
        check_dim("quadratic domain box", 2, domain.dim())?;
        self.domain = domain;
        Ok(self)
    }
}

impl ProblemOracle for QuadraticFamily {
    fn dims(&self) -> (usize, usize) {
        (1, 1)
    }

    fn value(&self, z: &IteratePoint) -> Result<f64> {
        ensure_dims(self, z)?;
        let (x, y) = (z.x[0], z.y[0]);
        Ok(0.5 * self.k * (x * x - y * y) + x * y)
    }

    fn grad(&self, z: &IteratePoint) -> Result<(DVector<f64>, DVector<f64>)> {
        ensure_dims(self, z)?;
        let (x, y) = (z.x[0], z.y[0]);
        Ok((
            DVector::from_element(1, self.k * x + y),
            DVector::from_element(1, -self.k * y + x),
        ))
    }

    fn hess_xx(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
        ensure_dims(self, z)?;
        Ok(DMatrix::from_element(1, 1, self.k))
    }

    fn hess_yy(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
        ensure_dims(self, z)?;
        Ok(DMatrix::from_element(1, 1, -self.k))
    }

    fn hess_xy(&self, z: &IteratePoint) -> Result<DMatrix<f64>> {
        ensure_dims(self, z)?;
        Ok(DMatrix::from_element(1, 1, 1.0))
    }

    fn hvp_xy(&self, z: &IteratePoint, v: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_dims(self, z)?;
        check_dim("hvp_xy vector", 1, v.len())?;
        Ok(v.clone())
    }

    fn hvp_yx(&self, z: &IteratePoint, u: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_dims(self, z)?;
        check_dim("hvp_yx vector", 1, u.len())?;
        Ok(u.clone())
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    /// The gradient map is `z -> [[k, 1], [1, -k]] z`, whose norm is
    /// `sqrt(k^2 + 1)`; Hessians are constant.
    fn lipschitz(&self) -> Option<LipschitzConstants> {
        let l_prime = (self.k * self.k + 1.0).sqrt();
        Some(LipschitzConstants {
            l: l_prime * self.domain.max_norm(),
            l_prime,
            l_xx: 0.0,
            l_yy: 0.0,
            l_xy: 0.0,
            domain_box: self.domain.clone(),
        })
    }

    fn has_constant_hessian(&self) -> bool {
        true
    }

    fn known_saddle_point(&self) -> Option<IteratePoint> {
        Some(IteratePoint::zeros(1, 1))
    }
}
