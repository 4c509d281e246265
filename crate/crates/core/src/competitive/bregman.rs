use nalgebra::DVector;

use crate::error::{check_dim, Result};
use crate::problems::{DomainBox, IteratePoint};

/// Result of a proximal step; `clamped` is set when the unconstrained
/// minimiser left the domain box and was projected back.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxStep {
    pub point: IteratePoint,
    pub clamped: bool,
}

/// Strongly convex potential `h` defining a Bregman divergence and the
/// proximal map `P_z(p) = argmin_{z'} <p, z - z'> + B_h(z', z)`.
pub trait MirrorPotential {
    fn divergence(&self, p: &IteratePoint, q: &IteratePoint) -> Result<f64>;

    fn proximal_map(&self, z: &IteratePoint, p: &DVector<f64>, domain: &DomainBox) -> Result<ProxStep>;
}

/// `h(z) = ||z||^2 / 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EuclideanPotential;

impl MirrorPotential for EuclideanPotential {
    fn divergence(&self, p: &IteratePoint, q: &IteratePoint) -> Result<f64> {
        Ok(0.5 * p.sub(q)?.norm_squared())
    }

    /// Closed form `z + p`, projected onto `domain`.
    fn proximal_map(&self, z: &IteratePoint, p: &DVector<f64>, domain: &DomainBox) -> Result<ProxStep> {
        check_dim("proximal direction", z.len(), p.len())?;
        let m = z.x.len();
        let moved = IteratePoint {
            x: &z.x + p.rows(0, m),
            y: &z.y + p.rows(m, z.y.len()),
        };
        let (point, clamped) = domain.clamp(&moved)?;
        Ok(ProxStep { point, clamped })
    }
}

pub fn bregman_divergence(p: &IteratePoint, q: &IteratePoint) -> Result<f64> {
    EuclideanPotential.divergence(p, q)
}

pub fn proximal_map(z: &IteratePoint, p: &DVector<f64>, domain: &DomainBox) -> Result<ProxStep> {
    EuclideanPotential.proximal_map(z, p, domain)
}
