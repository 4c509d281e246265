use serde::{Deserialize, Serialize};

use crate::competitive::{competitive_gradient, SolveSettings};
use crate::error::{CompGradError, Result};
use crate::problems::{ensure_dims, IteratePoint, ProblemOracle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSettings {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_threshold")]
    pub divergence_threshold: f64,
}

fn default_beta() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    1e-3
}

fn default_threshold() -> f64 {
    super::DEFAULT_DIVERGENCE_THRESHOLD
}

impl FlowSettings {
    pub fn new(beta: f64, dt: f64, t_end: f64) -> Self {
        Self {
            beta,
            dt,
            t_end,
            divergence_threshold: default_threshold(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(CompGradError::Config(format!("flow.beta must be positive, got {}", self.beta)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(CompGradError::Config(format!("flow.dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(CompGradError::Config(format!(
                "flow.t_end must be at least flow.dt, got {}",
                self.t_end
            )));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(CompGradError::Config("flow.divergence_threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Completed,
    Diverged,
}

/// Sampled solution of `dz/dt = -beta g_alpha(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<IteratePoint>,
    /// `||g_0(z(t))||^2` at each sample.
    pub lyapunov: Vec<f64>,
    pub status: FlowStatus,
    pub alpha: f64,
    pub settings: FlowSettings,
}

/// Integrates the competitive-gradient flow with classical fixed-step RK4.
///
/// Samples are taken at `t_k = k dt`; when `t_end` is not a multiple of `dt`
/// a final shorter step lands exactly on `t_end`.
pub fn integrate_flow(
    oracle: &dyn ProblemOracle,
    z0: &IteratePoint,
    alpha: f64,
    settings: &FlowSettings,
    solve: &SolveSettings,
) -> Result<FlowTrajectory> {
    settings.validate()?;
    solve.validate()?;
    ensure_dims(oracle, z0)?;
    if !alpha.is_finite() {
        return Err(CompGradError::Config(format!("flow alpha must be finite, got {alpha}")));
    }
    let (m, _) = oracle.dims();
    let beta = settings.beta;
    let rhs = |z: &nalgebra::DVector<f64>| -> Result<nalgebra::DVector<f64>> {
        let p = IteratePoint::from_joint(m, z)?;
        Ok(competitive_gradient(oracle, &p, alpha, solve)?.joint() * -beta)
    };
    let lyap = |z: &IteratePoint| -> Result<f64> {
        Ok(competitive_gradient(oracle, z, 0.0, solve)?.norm().powi(2))
    };

    let full = (settings.t_end / settings.dt + 1e-9).floor() as usize;
    let remainder = settings.t_end - full as f64 * settings.dt;
    let mut steps: Vec<f64> = vec![settings.dt; full];
    if remainder > 1e-9 * settings.dt {
        steps.push(remainder);
    }

    let mut times = Vec::with_capacity(steps.len() + 1);
    let mut points = Vec::with_capacity(steps.len() + 1);
    let mut lyapunov = Vec::with_capacity(steps.len() + 1);
    times.push(0.0);
    points.push(z0.clone());
    lyapunov.push(lyap(z0)?);

    let mut z = z0.joint();
    let mut status = FlowStatus::Completed;
    for (k, h) in steps.iter().copied().enumerate() {
        let k1 = rhs(&z)?;
        let k2 = rhs(&(&z + &k1 * (0.5 * h)))?;
        let k3 = rhs(&(&z + &k2 * (0.5 * h)))?;
        let k4 = rhs(&(&z + &k3 * h))?;
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);

        let t = if k < full { (k + 1) as f64 * settings.dt } else { settings.t_end };
        times.push(t);
        if !z.iter().all(|v| v.is_finite()) || z.norm() >= settings.divergence_threshold {
            let p = IteratePoint {
                x: z.rows(0, m).into_owned(),
                y: z.rows(m, z.len() - m).into_owned(),
            };
            lyapunov.push(if p.is_finite() { lyap(&p).unwrap_or(f64::NAN) } else { f64::NAN });
            points.push(p);
            status = FlowStatus::Diverged;
            log::debug!("flow diverged at t = {t}");
            break;
        }
        let p = IteratePoint::from_joint(m, &z)?;
        lyapunov.push(lyap(&p)?);
        points.push(p);
    }

    Ok(FlowTrajectory {
        times,
        points,
        lyapunov,
        status,
        alpha,
        settings: *settings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_bilinear, make_quadratic_family};
    use nalgebra::DMatrix;

    #[test]
    fn xy_flow_matches_closed_form() {
        // alpha = 1 on f = xy: g = ((x + y) / 2, (y - x) / 2), so |z|^2 decays as exp(-t).
        let f = make_bilinear(DMatrix::from_element(1, 1, 1.0)).unwrap();
        let z0 = IteratePoint::from_slices(&[1.0], &[0.0]).unwrap();
        let traj = integrate_flow(&f, &z0, 1.0, &FlowSettings::new(1.0, 1e-2, 2.0), &SolveSettings::default()).unwrap();
        assert_eq!(traj.status, FlowStatus::Completed);
        assert_eq!(traj.times.len(), 201);
        assert!((traj.times.last().unwrap() - 2.0).abs() < 1e-12);
        let n2 = traj.points.last().unwrap().norm_squared();
        assert!((n2 - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn remainder_step_hits_t_end() {
        let f = make_quadratic_family(1.0).unwrap();
        let z0 = IteratePoint::from_slices(&[1.0], &[1.0]).unwrap();
        let traj = integrate_flow(&f, &z0, 0.0, &FlowSettings::new(1.0, 0.3, 1.0), &SolveSettings::default()).unwrap();
        assert_eq!(traj.times.len(), 5);
        assert!((traj.times[3] - 0.9).abs() < 1e-12);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
    }

    #[test]
    fn lyapunov_decreases_for_strongly_monotone_family() {
        let f = make_quadratic_family(2.0).unwrap();
        let z0 = IteratePoint::from_slices(&[1.0], &[-1.0]).unwrap();
        let traj = integrate_flow(&f, &z0, 0.5, &FlowSettings::new(1.0, 1e-2, 1.0), &SolveSettings::default()).unwrap();
        for w in traj.lyapunov.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn rejects_bad_settings() {
        let f = make_quadratic_family(1.0).unwrap();
        let z0 = IteratePoint::from_slices(&[1.0], &[1.0]).unwrap();
        let s = SolveSettings::default();
        assert!(integrate_flow(&f, &z0, 0.0, &FlowSettings::new(1.0, 0.0, 1.0), &s).is_err());
        assert!(integrate_flow(&f, &z0, 0.0, &FlowSettings::new(1.0, 0.1, 0.01), &s).is_err());
        assert!(integrate_flow(&f, &z0, 0.0, &FlowSettings::new(0.0, 0.1, 1.0), &s).is_err());
    }
}
