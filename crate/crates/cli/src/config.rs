use std::path::{Path, PathBuf};

use compgrad_core::analysis::{Classification, ProbeOptions};
use compgrad_core::competitive::SolveSettings;
use compgrad_core::problems::{DomainBox, IteratePoint, ProblemSpec};
use compgrad_core::solvers::{FlowSettings, SolverConfig, DEFAULT_DIVERGENCE_THRESHOLD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[serde(alias = "Run")]
    Run,
    #[serde(alias = "Sweep")]
    Sweep,
    #[serde(alias = "Flow")]
    Flow,
    #[serde(alias = "Coherence")]
    Coherence,
    #[serde(alias = "Rates")]
    Rates,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Mode::Run => "run",
            Mode::Sweep => "sweep",
            Mode::Flow => "flow",
            Mode::Coherence => "coherence",
            Mode::Rates => "rates",
        };
        f.write_str(s)
    }
}

/// A point given as a joint vector `[x.., y..]`, as separate blocks, or as
/// `"random(<seed>)"` (independent standard normal coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Joint(Vec<f64>),
    Blocks { x: Vec<f64>, y: Vec<f64> },
    Random(String),
}

impl PointSpec {
    pub fn resolve(&self, field: &str, dims: (usize, usize)) -> Result<IteratePoint, CliError> {
        let (m, n) = dims;
        let bad = |msg: String| CliError::Config(format!("{field}: {msg}"));
        match self {
            PointSpec::Joint(v) => {
                if v.len() != m + n {
                    return Err(bad(format!("expected {} coordinates, got {}", m + n, v.len())));
                }
                IteratePoint::from_slices(&v[..m], &v[m..]).map_err(|e| bad(e.to_string()))
            }
            PointSpec::Blocks { x, y } => {
                if x.len() != m || y.len() != n {
                    return Err(bad(format!("expected blocks of sizes ({m}, {n}), got ({}, {})", x.len(), y.len())));
                }
                IteratePoint::from_slices(x, y).map_err(|e| bad(e.to_string()))
            }
            PointSpec::Random(s) => {
                let seed = parse_random(s).ok_or_else(|| bad(format!("expected \"random(<seed>)\", got {s:?}")))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v: Vec<f64> = (0..m + n).map(|_| StandardNormal.sample(&mut rng)).collect();
                IteratePoint::from_slices(&v[..m], &v[m..]).map_err(|e| bad(e.to_string()))
            }
        }
    }
}

fn parse_random(s: &str) -> Option<u64> {
    s.trim().strip_prefix("random(")?.strip_suffix(')')?.trim().parse().ok()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub trajectory_csv: Option<PathBuf>,
    pub report_json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    /// Defaults to `solver.alpha`, else 0.
    pub alpha: Option<f64>,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_threshold")]
    pub divergence_threshold: f64,
}

impl FlowSection {
    pub fn settings(&self) -> FlowSettings {
        FlowSettings {
            beta: self.beta,
            dt: self.dt,
            t_end: self.t_end,
            divergence_threshold: self.divergence_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceSection {
    /// Defaults to `solver.alpha`, else 0.
    pub alpha: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: u64,
    pub tol: Option<f64>,
    /// Defaults to the problem's domain box.
    pub region: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    /// Defaults to `solver.alpha`, else 0.
    pub alpha: Option<f64>,
    /// Defaults to `flow.beta`, else 1.
    pub beta: Option<f64>,
    /// Defaults to the solver's first step size.
    pub eta: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    1e-3
}

fn default_threshold() -> f64 {
    DEFAULT_DIVERGENCE_THRESHOLD
}

fn default_samples() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub problem: ProblemSpec,
    pub solver: Option<SolverConfig>,
    pub z0: Option<PointSpec>,
    #[serde(default)]
    pub outputs: Outputs,
    pub alpha_grid: Option<Vec<f64>>,
    pub flow: Option<FlowSection>,
    pub probe_point: Option<PointSpec>,
    pub z_star: Option<PointSpec>,
    pub coherence: Option<CoherenceSection>,
    pub rates: Option<RatesSection>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Reads a config file; relative output paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for p in [&mut cfg.outputs.trajectory_csv, &mut cfg.outputs.report_json].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn check_mode(&self, command: Mode) -> Result<(), CliError> {
        match self.mode {
            Some(m) if m != command => Err(CliError::Config(format!(
                "mode: config is for `{m}` but the `{command}` command was invoked"
            ))),
            _ => Ok(()),
        }
    }

    pub fn solver(&self) -> Result<&SolverConfig, CliError> {
        let s = self.solver.as_ref().ok_or_else(|| CliError::Config("solver: missing".into()))?;
        s.validate().map_err(|e| CliError::Config(format!("solver: {e}")))?;
        Ok(s)
    }

    pub fn solve_settings(&self) -> SolveSettings {
        self.solver.as_ref().map(|s| s.solve.clone()).unwrap_or_default()
    }

    pub fn default_alpha(&self) -> f64 {
        self.solver.as_ref().map_or(0.0, |s| s.alpha)
    }

    pub fn z0(&self, dims: (usize, usize)) -> Result<IteratePoint, CliError> {
        self.z0
            .as_ref()
            .ok_or_else(|| CliError::Config("z0: missing".into()))?
            .resolve("z0", dims)
    }

    pub fn trajectory_csv(&self) -> Result<&Path, CliError> {
        self.outputs
            .trajectory_csv
            .as_deref()
            .ok_or_else(|| CliError::Config("outputs.trajectory_csv: missing".into()))
    }

    pub fn report_json(&self) -> Result<&Path, CliError> {
        self.outputs
            .report_json
            .as_deref()
            .ok_or_else(|| CliError::Config("outputs.report_json: missing".into()))
    }
}

impl CoherenceSection {
    pub fn probe_options(&self, field: &str, domain: &DomainBox, solve: SolveSettings) -> Result<ProbeOptions, CliError> {
        let region = match &self.region {
            Some(r) => DomainBox::new(r.clone()).map_err(|e| CliError::Config(format!("{field}.region: {e}")))?,
            None => domain.clone(),
        };
        let mut opts = ProbeOptions::new(region, self.samples, self.seed);
        opts.tol = self.tol;
        opts.solve = solve;
        Ok(opts)
    }
}

/// Whether a classification marks alpha as a boundary value: the field is
/// tangent to every sphere around the saddle point.
pub fn is_boundary(c: Classification) -> bool {
    c == Classification::NullCoherent
}
