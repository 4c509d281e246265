//! Discrete-time steppers, the iteration driver and the continuous-time flow.

mod flow;
mod schedule;
mod steps;

use serde::{Deserialize, Serialize};

use crate::competitive::{competitive_gradient, CompetitiveGradient, SolveSettings};
use crate::error::{CompGradError, Result};
use crate::problems::{ensure_dims, IteratePoint, ProblemOracle};

pub use flow::{integrate_flow, FlowSettings, FlowStatus, FlowTrajectory};
pub use schedule::{robbins_monro_schedule, StepSchedule};
pub use steps::{cgd_step, cgo_step, gda_step, ocgo_step, omda_step, OptimisticStep};

pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(alias = "gda")]
    GDA,
    #[serde(alias = "cgd")]
    CGD,
    #[serde(alias = "cgo")]
    CGO,
    #[serde(alias = "omda")]
    OMDA,
    #[serde(alias = "ocgo", alias = "oCGO")]
    OCGO,
}

impl Algorithm {
    /// Interaction weight used at step size `eta`: CGD couples it to `eta`,
    /// GDA and OMDA ignore it.
    pub fn effective_alpha(self, alpha: f64, eta: f64) -> f64 {
        match self {
            Algorithm::GDA | Algorithm::OMDA => 0.0,
            Algorithm::CGD => eta,
            Algorithm::CGO | Algorithm::OCGO => alpha,
        }
    }

    pub fn is_optimistic(self) -> bool {
        matches!(self, Algorithm::OMDA | Algorithm::OCGO)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub schedule: StepSchedule,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_divergence_threshold")]
    pub divergence_threshold: f64,
    #[serde(default)]
    pub solve: SolveSettings,
    /// Keep the half iterates of OMDA / oCGO in the trajectory.
    #[serde(default)]
    pub record_half_steps: bool,
}

fn default_max_iters() -> usize {
    100
}

fn default_grad_tol() -> f64 {
    1e-8
}

fn default_divergence_threshold() -> f64 {
    DEFAULT_DIVERGENCE_THRESHOLD
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, alpha: f64, eta: f64) -> Self {
        Self {
            algorithm,
            alpha,
            schedule: StepSchedule::Constant { eta },
            max_iters: default_max_iters(),
            grad_tol: default_grad_tol(),
            divergence_threshold: default_divergence_threshold(),
            solve: SolveSettings::default(),
            record_half_steps: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(CompGradError::Config("solver.max_iters must be at least 1".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(CompGradError::Config(format!(
                "solver.grad_tol must be non-negative, got {}",
                self.grad_tol
            )));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(CompGradError::Config(format!(
                "solver.divergence_threshold must be positive, got {}",
                self.divergence_threshold
            )));
        }
        if !self.alpha.is_finite() {
            return Err(CompGradError::Config(format!("solver.alpha must be finite, got {}", self.alpha)));
        }
        self.schedule.validate()?;
        self.solve.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIters,
    Diverged,
    /// Partial trajectory returned alongside an oracle or solve error.
    Aborted,
}

/// Iterates of a discrete run. Entry `k` of every per-iterate vector refers to
/// `points[k]`; `etas[k]` is the step size that produced `points[k]`
/// (zero for the initial point).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<IteratePoint>,
    pub etas: Vec<f64>,
    pub g_norms: Vec<f64>,
    pub x_norms: Vec<f64>,
    pub y_norms: Vec<f64>,
    /// Half iterates of optimistic methods, when requested.
    pub half_points: Option<Vec<IteratePoint>>,
    pub status: RunStatus,
    pub config_echo: SolverConfig,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn last(&self) -> &IteratePoint {
        self.points.last().expect("trajectory always holds z0")
    }

    fn push_norms(&mut self, z: &IteratePoint, g_norm: f64) {
        self.x_norms.push(z.x.norm());
        self.y_norms.push(z.y.norm());
        self.g_norms.push(g_norm);
    }
}

/// An oracle or solve error, with the iterates computed before it.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: CompGradError,
    pub partial: Box<Trajectory>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} steps)", self.error, self.partial.steps())
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Runs the configured method from `z0`.
///
/// At every iterate `z_n` the driver evaluates `g_alpha(z_n)` (with the
/// algorithm's effective alpha) and stops with `Converged` once its norm is at
/// most `grad_tol`, `Diverged` when `||z_n||` reaches the threshold or turns
/// non-finite, and `MaxIters` after `max_iters` steps.
pub fn run_solver(
    oracle: &dyn ProblemOracle,
    z0: &IteratePoint,
    config: &SolverConfig,
) -> std::result::Result<Trajectory, RunFailure> {
    let mut traj = Trajectory {
        points: vec![z0.clone()],
        etas: vec![0.0],
        g_norms: Vec::new(),
        x_norms: Vec::new(),
        y_norms: Vec::new(),
        half_points: (config.record_half_steps && config.algorithm.is_optimistic()).then(Vec::new),
        status: RunStatus::Aborted,
        config_echo: config.clone(),
    };
    let fail = |error: CompGradError, mut traj: Trajectory| {
        traj.status = RunStatus::Aborted;
        RunFailure {
            error,
            partial: Box::new(traj),
        }
    };
    if let Err(e) = config.validate().and_then(|_| ensure_dims(oracle, z0)) {
        return Err(fail(e, traj));
    }

    let mut n = 0usize;
    loop {
        let z = traj.points[n].clone();
        let eta = config.schedule.eta(n + 1);
        let alpha = config.algorithm.effective_alpha(config.alpha, eta);

        if !z.is_finite() || z.norm() >= config.divergence_threshold {
            let g_norm = if z.is_finite() {
                competitive_gradient(oracle, &z, alpha, &config.solve).map_or(f64::NAN, |g| g.norm())
            } else {
                f64::NAN
            };
            traj.push_norms(&z, g_norm);
            traj.status = RunStatus::Diverged;
            log::debug!("diverged at step {n} with |z| = {}", z.norm());
            return Ok(traj);
        }

        let g = match competitive_gradient(oracle, &z, alpha, &config.solve) {
            Ok(g) => g,
            Err(e) => return Err(fail(e, traj)),
        };
        traj.push_norms(&z, g.norm());
        if g.norm() <= config.grad_tol {
            traj.status = RunStatus::Converged;
            return Ok(traj);
        }
        if n == config.max_iters {
            traj.status = RunStatus::MaxIters;
            return Ok(traj);
        }

        match advance(oracle, &z, &g, eta, config) {
            Ok((next, half)) => {
                if let (Some(halves), Some(h)) = (traj.half_points.as_mut(), half) {
                    halves.push(h);
                }
                traj.points.push(next);
                traj.etas.push(eta);
            }
            Err(e) => return Err(fail(e, traj)),
        }
        n += 1;
    }
}

/// One step of the configured method, given `g = g_alpha(z)` already evaluated.
fn advance(
    oracle: &dyn ProblemOracle,
    z: &IteratePoint,
    g: &CompetitiveGradient,
    eta: f64,
    config: &SolverConfig,
) -> Result<(IteratePoint, Option<IteratePoint>)> {
    match config.algorithm {
        Algorithm::GDA | Algorithm::CGD | Algorithm::CGO => Ok((steps::apply_step(z, g, eta), None)),
        Algorithm::OMDA => {
            let s = omda_step(oracle, Some(g), z, eta)?;
            Ok((s.next, Some(s.half)))
        }
        Algorithm::OCGO => {
            let s = steps::ocgo_from_gradient(oracle, z, g, eta, &config.solve)?;
            Ok((s.next, Some(s.half)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_bilinear, make_quadratic_family};
    use nalgebra::DMatrix;

    fn xy() -> impl ProblemOracle {
        make_bilinear(DMatrix::from_element(1, 1, 1.0)).unwrap()
    }

    fn pt(x: f64, y: f64) -> IteratePoint {
        IteratePoint::from_slices(&[x], &[y]).unwrap()
    }

    #[test]
    fn gda_on_xy_grows_by_exact_factor() {
        let cfg = SolverConfig::new(Algorithm::GDA, 0.0, 0.1);
        let traj = run_solver(&xy(), &pt(1.0, 1.0), &cfg).unwrap();
        assert_eq!(traj.status, RunStatus::MaxIters);
        assert_eq!(traj.points.len(), 101);
        let factor = 1.01f64.sqrt();
        for w in traj.points.windows(2) {
            let ratio = w[1].norm() / w[0].norm();
            assert!((ratio - factor).abs() < 1e-12 * factor);
        }
    }

    #[test]
    fn cgo_on_xy_converges() {
        let mut cfg = SolverConfig::new(Algorithm::CGO, 1.0, 0.2);
        cfg.grad_tol = 1e-3;
        let traj = run_solver(&xy(), &pt(1.0, 1.0), &cfg).unwrap();
        assert_eq!(traj.status, RunStatus::Converged);
        assert!(traj.steps() < 100);
        assert!(*traj.g_norms.last().unwrap() <= 1e-3);
    }

    #[test]
    fn origin_converges_immediately() {
        let cfg = SolverConfig::new(Algorithm::CGO, 1.0, 0.2);
        let traj = run_solver(&xy(), &pt(0.0, 0.0), &cfg).unwrap();
        assert_eq!(traj.status, RunStatus::Converged);
        assert_eq!(traj.steps(), 0);
        assert_eq!(traj.g_norms, vec![0.0]);
    }

    #[test]
    fn divergence_threshold_stops_run() {
        let mut cfg = SolverConfig::new(Algorithm::GDA, 0.0, 0.5);
        cfg.divergence_threshold = 10.0;
        cfg.max_iters = 10_000;
        let traj = run_solver(&xy(), &pt(1.0, 1.0), &cfg).unwrap();
        assert_eq!(traj.status, RunStatus::Diverged);
        assert!(traj.last().norm() >= 10.0);
        assert_eq!(traj.g_norms.len(), traj.points.len());
    }

    #[test]
    fn rejects_zero_max_iters() {
        let mut cfg = SolverConfig::new(Algorithm::GDA, 0.0, 0.1);
        cfg.max_iters = 0;
        let err = run_solver(&xy(), &pt(1.0, 1.0), &cfg).unwrap_err();
        assert!(matches!(err.error, CompGradError::Config(_)));
        assert_eq!(err.partial.status, RunStatus::Aborted);
    }

    #[test]
    fn run_matches_public_steppers() {
        let f = make_quadratic_family(2.0).unwrap();
        let z0 = pt(0.7, -0.4);
        for alg in [Algorithm::GDA, Algorithm::CGD, Algorithm::CGO, Algorithm::OMDA, Algorithm::OCGO] {
            let mut cfg = SolverConfig::new(alg, 0.8, 0.05);
            cfg.max_iters = 5;
            cfg.record_half_steps = true;
            let traj = run_solver(&f, &z0, &cfg).unwrap();
            let s = SolveSettings::default();
            let mut z = z0.clone();
            for (k, p) in traj.points.iter().enumerate().skip(1) {
                let (next, half) = match alg {
                    Algorithm::GDA => (gda_step(&f, &z, 0.05).unwrap(), None),
                    Algorithm::CGD => (cgd_step(&f, &z, 0.05, &s).unwrap(), None),
                    Algorithm::CGO => (cgo_step(&f, &z, 0.8, 0.05, &s).unwrap(), None),
                    Algorithm::OMDA => {
                        let st = omda_step(&f, None, &z, 0.05).unwrap();
                        (st.next, Some(st.half))
                    }
                    Algorithm::OCGO => {
                        let st = ocgo_step(&f, &z, 0.8, 0.05, &s).unwrap();
                        (st.next, Some(st.half))
                    }
                };
                assert_eq!(&next, p, "{alg:?} step {k}");
                if let Some(h) = half {
                    assert_eq!(&traj.half_points.as_ref().unwrap()[k - 1], &h);
                }
                z = next;
            }
        }
    }

    #[test]
    fn robbins_monro_steps_recorded() {
        let mut cfg = SolverConfig::new(Algorithm::CGO, 1.0, 0.1);
        cfg.schedule = robbins_monro_schedule(0.5, 10.0, 1.0).unwrap();
        cfg.max_iters = 3;
        let traj = run_solver(&xy(), &pt(1.0, 1.0), &cfg).unwrap();
        assert_eq!(traj.etas, vec![0.0, 0.5 / 11.0, 0.5 / 12.0, 0.5 / 13.0]);
    }
}
