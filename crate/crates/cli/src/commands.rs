use std::path::{Path, PathBuf};

use compgrad_core::analysis::{
    mvi_probe, ocgo_param_bounds, rate_continuous, rate_discrete, spectral_summary, svi_residual, Classification,
    CoherenceReport, DiscreteRate, EtaBound, SpectralSummary, SviReport,
};
use compgrad_core::problems::{BuiltProblem, Family, IteratePoint, LipschitzConstants};
use compgrad_core::solvers::{integrate_flow, run_solver, Algorithm, FlowStatus, RunStatus, SolverConfig, Trajectory};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{is_boundary, ExperimentConfig, Mode};
use crate::output::{format_float, push_state, state_header, write_file, write_json, FLOW_HEADER, TRAJECTORY_HEADER};
use crate::{CliError, ExitStatus};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Append every coordinate of the iterate to each CSV row.
    pub full_state: bool,
    /// Worker threads for sweeps; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

/// Loads the config at `path` and runs `mode`.
pub fn execute(mode: Mode, path: &Path, opts: &RunOptions) -> Result<ExitStatus, CliError> {
    let cfg = ExperimentConfig::load(path)?;
    cfg.check_mode(mode)?;
    match mode {
        Mode::Run => cmd_run(&cfg, opts),
        Mode::Sweep => cmd_sweep(&cfg, opts),
        Mode::Flow => cmd_flow(&cfg, opts),
        Mode::Rates => cmd_rates(&cfg),
        Mode::Coherence => cmd_coherence(&cfg),
    }
}

fn build(cfg: &ExperimentConfig) -> Result<BuiltProblem, CliError> {
    cfg.problem.build().map_err(|e| CliError::Config(format!("problem: {e}")))
}

fn trajectory_csv(traj: &Trajectory, dims: (usize, usize), full_state: bool) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    if full_state {
        out.push_str(&state_header(dims));
    }
    out.push('\n');
    for (k, z) in traj.points.iter().enumerate() {
        let cols = [
            traj.etas[k],
            traj.x_norms.get(k).copied().unwrap_or(f64::NAN),
            traj.y_norms.get(k).copied().unwrap_or(f64::NAN),
            traj.g_norms.get(k).copied().unwrap_or(f64::NAN),
        ];
        out.push_str(&k.to_string());
        for v in cols {
            out.push(',');
            out.push_str(&format_float(v));
        }
        if full_state {
            push_state(&mut out, z);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct RunReport {
    family: Family,
    status: RunStatus,
    steps: usize,
    initial_norm: f64,
    final_norm: f64,
    final_norm_x: f64,
    final_norm_y: f64,
    final_norm_g_alpha: f64,
    solver: SolverConfig,
}

fn run_report(family: Family, traj: &Trajectory) -> RunReport {
    let last = traj.last();
    RunReport {
        family,
        status: traj.status,
        steps: traj.steps(),
        initial_norm: traj.points[0].norm(),
        final_norm: last.norm(),
        final_norm_x: last.x.norm(),
        final_norm_y: last.y.norm(),
        final_norm_g_alpha: traj.g_norms.last().copied().unwrap_or(f64::NAN),
        solver: traj.config_echo.clone(),
    }
}

/// Runs one solver and writes its trajectory CSV (and a JSON summary when
/// `outputs.report_json` is set). Exit 2 when the run diverged.
pub fn cmd_run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExitStatus, CliError> {
    let built = build(cfg)?;
    let solver = cfg.solver()?;
    let dims = built.oracle.dims();
    let z0 = cfg.z0(dims)?;
    let csv_path = cfg.trajectory_csv()?;

    let traj = match run_solver(built.oracle.as_ref(), &z0, solver) {
        Ok(t) => t,
        Err(failure) => {
            write_file(csv_path, &trajectory_csv(&failure.partial, dims, opts.full_state))?;
            return Err(CliError::Core(failure.error));
        }
    };
    write_file(csv_path, &trajectory_csv(&traj, dims, opts.full_state))?;
    if let Some(path) = &cfg.outputs.report_json {
        write_json(path, &run_report(built.family, &traj))?;
    }
    log::info!("{:?} finished with {:?} after {} steps", solver.algorithm, traj.status, traj.steps());
    Ok(match traj.status {
        RunStatus::Diverged => ExitStatus::Diverged,
        _ => ExitStatus::Ok,
    })
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    index: usize,
    alpha: f64,
    csv: String,
    status: Option<RunStatus>,
    steps: Option<usize>,
    initial_norm: f64,
    final_norm: Option<f64>,
    final_norm_x: Option<f64>,
    final_norm_y: Option<f64>,
    final_norm_g_alpha: Option<f64>,
    coherence: Option<Classification>,
    /// Set when the probe finds `alpha` on the boundary of the coherent range.
    boundary: Option<bool>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    family: Family,
    algorithm: Algorithm,
    alpha_grid: Vec<f64>,
    runs: Vec<SweepEntry>,
    converged_alphas: Vec<f64>,
    smallest_converged_alpha: Option<f64>,
}

fn sweep_csv_path(base: &Path, index: usize) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_alpha{index:03}.{ext}"))
}

/// Runs the solver once per entry of `alpha_grid`, writing one CSV per run
/// and a summary JSON. Succeeds if at least one run completed without error.
pub fn cmd_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExitStatus, CliError> {
    let grid = match &cfg.alpha_grid {
        Some(g) if !g.is_empty() => g.clone(),
        _ => return Err(CliError::Config("alpha_grid: sweep needs a non-empty list".into())),
    };
    let built = build(cfg)?;
    let solver = cfg.solver()?;
    let dims = built.oracle.dims();
    let z0 = cfg.z0(dims)?;
    let base = cfg.trajectory_csv()?;
    let report_path = cfg.report_json()?;
    let probe = match (&cfg.coherence, built.oracle.known_saddle_point()) {
        (Some(section), Some(z_star)) => Some((
            section.probe_options("coherence", built.oracle.domain(), cfg.solve_settings())?,
            z_star,
        )),
        _ => None,
    };

    let run_one = |(index, &alpha): (usize, &f64)| -> Result<SweepEntry, CliError> {
        let mut config = solver.clone();
        config.alpha = alpha;
        let path = sweep_csv_path(base, index);
        let csv = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let mut entry = SweepEntry {
            index,
            alpha,
            csv,
            status: None,
            steps: None,
            initial_norm: z0.norm(),
            final_norm: None,
            final_norm_x: None,
            final_norm_y: None,
            final_norm_g_alpha: None,
            coherence: None,
            boundary: None,
            error: None,
        };
        if let Some((options, z_star)) = &probe {
            match mvi_probe(built.oracle.as_ref(), z_star, alpha, options) {
                Ok(r) => {
                    entry.coherence = Some(r.classification);
                    entry.boundary = Some(is_boundary(r.classification));
                }
                Err(e) => log::warn!("coherence probe failed at alpha = {alpha}: {e}"),
            }
        }
        let traj = match run_solver(built.oracle.as_ref(), &z0, &config) {
            Ok(t) => t,
            Err(failure) => {
                write_file(&path, &trajectory_csv(&failure.partial, dims, opts.full_state))?;
                entry.status = Some(RunStatus::Aborted);
                entry.steps = Some(failure.partial.steps());
                entry.error = Some(failure.error.to_string());
                return Ok(entry);
            }
        };
        write_file(&path, &trajectory_csv(&traj, dims, opts.full_state))?;
        let last = traj.last();
        entry.status = Some(traj.status);
        entry.steps = Some(traj.steps());
        entry.final_norm = Some(last.norm());
        entry.final_norm_x = Some(last.x.norm());
        entry.final_norm_y = Some(last.y.norm());
        entry.final_norm_g_alpha = traj.g_norms.last().copied();
        Ok(entry)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    let results: Vec<Result<SweepEntry, CliError>> =
        pool.install(|| grid.par_iter().enumerate().map(run_one).collect());
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let converged_alphas: Vec<f64> = runs
        .iter()
        .filter(|r| r.status == Some(RunStatus::Converged))
        .map(|r| r.alpha)
        .collect();
    let smallest_converged_alpha = converged_alphas.iter().copied().reduce(f64::min);
    let any_ok = runs.iter().any(|r| r.error.is_none());
    let summary = SweepSummary {
        family: built.family,
        algorithm: solver.algorithm,
        alpha_grid: grid,
        runs,
        converged_alphas,
        smallest_converged_alpha,
    };
    write_json(report_path, &summary)?;
    if any_ok {
        Ok(ExitStatus::Ok)
    } else {
        Err(CliError::Config("alpha_grid: every run in the sweep failed".into()))
    }
}

#[derive(Debug, Serialize)]
struct FlowReport {
    alpha: f64,
    beta: f64,
    dt: f64,
    t_end: f64,
    status: FlowStatus,
    samples: usize,
    initial_norm: f64,
    final_norm: f64,
    initial_norm_g0_sq: f64,
    final_norm_g0_sq: f64,
}

/// Integrates the continuous-time flow and writes `t,norm_g0_sq,norm_x,norm_y`.
pub fn cmd_flow(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExitStatus, CliError> {
    let section = cfg.flow.as_ref().ok_or_else(|| CliError::Config("flow: missing".into()))?;
    let settings = section.settings();
    settings.validate().map_err(|e| CliError::Config(format!("flow: {e}")))?;
    let built = build(cfg)?;
    let dims = built.oracle.dims();
    let z0 = cfg.z0(dims)?;
    let csv_path = cfg.trajectory_csv()?;
    let alpha = section.alpha.unwrap_or_else(|| cfg.default_alpha());

    let traj = integrate_flow(built.oracle.as_ref(), &z0, alpha, &settings, &cfg.solve_settings())?;
    let mut out = String::from(FLOW_HEADER);
    if opts.full_state {
        out.push_str(&state_header(dims));
    }
    out.push('\n');
    for ((t, v), z) in traj.times.iter().zip(&traj.lyapunov).zip(&traj.points) {
        for (i, c) in [*t, *v, z.x.norm(), z.y.norm()].into_iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_float(c));
        }
        if opts.full_state {
            push_state(&mut out, z);
        }
        out.push('\n');
    }
    write_file(csv_path, &out)?;

    if let Some(path) = &cfg.outputs.report_json {
        let report = FlowReport {
            alpha,
            beta: settings.beta,
            dt: settings.dt,
            t_end: settings.t_end,
            status: traj.status,
            samples: traj.times.len(),
            initial_norm: z0.norm(),
            final_norm: traj.points.last().map_or(f64::NAN, |z| z.norm()),
            initial_norm_g0_sq: traj.lyapunov[0],
            final_norm_g0_sq: *traj.lyapunov.last().unwrap_or(&f64::NAN),
        };
        write_json(path, &report)?;
    }
    Ok(match traj.status {
        FlowStatus::Diverged => ExitStatus::Diverged,
        FlowStatus::Completed => ExitStatus::Ok,
    })
}

#[derive(Debug, Serialize)]
struct RatesReport {
    probe_point: IteratePoint,
    alpha: f64,
    beta: f64,
    eta: f64,
    spectral_summary: SpectralSummary,
    lambda_continuous: f64,
    lambda_discrete: f64,
    discrete_rate: DiscreteRate,
    lipschitz: Option<LipschitzConstants>,
    ocgo_alpha_sq_max: Option<f64>,
    ocgo_alpha_admissible: Option<bool>,
    ocgo_eta_max: Option<EtaBound>,
}

/// Evaluates the rate formulas and oCGO bounds at the probe point.
pub fn cmd_rates(cfg: &ExperimentConfig) -> Result<ExitStatus, CliError> {
    let built = build(cfg)?;
    let oracle = built.oracle.as_ref();
    let dims = oracle.dims();
    let point = match &cfg.probe_point {
        Some(p) => p.resolve("probe_point", dims)?,
        None if oracle.has_constant_hessian() => {
            oracle.known_saddle_point().unwrap_or_else(|| IteratePoint::zeros(dims.0, dims.1))
        }
        None => {
            return Err(CliError::Config(
                "probe_point: required for problems whose Hessian varies with the point".into(),
            ))
        }
    };
    let section = cfg.rates.clone().unwrap_or_default();
    let alpha = section.alpha.unwrap_or_else(|| cfg.default_alpha());
    if alpha.is_nan() || alpha < 0.0 {
        return Err(CliError::Config(format!("rates.alpha: must be non-negative, got {alpha}")));
    }
    let beta = section.beta.or(cfg.flow.as_ref().map(|f| f.beta)).unwrap_or(1.0);
    if beta.is_nan() || beta <= 0.0 {
        return Err(CliError::Config(format!("rates.beta: must be positive, got {beta}")));
    }
    let eta = section
        .eta
        .or(cfg.solver.as_ref().map(|s| s.schedule.eta(1)))
        .ok_or_else(|| CliError::Config("rates.eta: missing (and no solver schedule to take it from)".into()))?;

    let summary = spectral_summary(oracle, &point)?;
    let discrete = rate_discrete(&summary, alpha, eta)?;
    let bounds = built.lipschitz.as_ref().map(ocgo_param_bounds).transpose()?;
    let report = RatesReport {
        alpha,
        beta,
        eta,
        lambda_continuous: rate_continuous(&summary, alpha, beta),
        lambda_discrete: discrete.lambda,
        discrete_rate: discrete,
        spectral_summary: summary,
        ocgo_alpha_sq_max: bounds.map(|b| b.alpha_sq_max),
        ocgo_alpha_admissible: bounds.map(|b| b.alpha_admissible(alpha)),
        ocgo_eta_max: bounds.map(|b| b.eta_max(alpha)),
        lipschitz: built.lipschitz.clone(),
        probe_point: point,
    };
    write_json(cfg.report_json()?, &report)?;
    Ok(ExitStatus::Ok)
}

#[derive(Debug, Serialize)]
struct CoherenceOutput {
    #[serde(flatten)]
    mvi: CoherenceReport,
    z_star: IteratePoint,
    svi: SviReport,
}

/// Samples the variational inequalities around `z_star` and writes the report.
pub fn cmd_coherence(cfg: &ExperimentConfig) -> Result<ExitStatus, CliError> {
    let section = cfg
        .coherence
        .as_ref()
        .ok_or_else(|| CliError::Config("coherence: missing".into()))?;
    let built = build(cfg)?;
    let oracle = built.oracle.as_ref();
    let z_star = match &cfg.z_star {
        Some(p) => p.resolve("z_star", oracle.dims())?,
        None => oracle
            .known_saddle_point()
            .ok_or_else(|| CliError::Config("z_star: required for this problem family".into()))?,
    };
    let alpha = section.alpha.unwrap_or_else(|| cfg.default_alpha());
    let options = section.probe_options("coherence", oracle.domain(), cfg.solve_settings())?;
    let mvi = mvi_probe(oracle, &z_star, alpha, &options)?;
    let svi = svi_residual(oracle, &z_star, alpha, &options)?;
    log::info!("alpha = {alpha}: {:?}", mvi.classification);
    write_json(cfg.report_json()?, &CoherenceOutput { mvi, z_star, svi })?;
    Ok(ExitStatus::Ok)
}
