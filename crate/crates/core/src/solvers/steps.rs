use crate::competitive::{competitive_gradient, proximal_map, CompetitiveGradient, SolveSettings};
use crate::error::{CompGradError, Result};
use crate::problems::{IteratePoint, ProblemOracle};

/// Output of a two-stage (optimistic / extra-gradient) step.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimisticStep {
    pub next: IteratePoint,
    pub half: IteratePoint,
    /// Set when a proximal stage was projected back onto the domain (OMDA only).
    pub clamped: bool,
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 {
        Ok(())
    } else {
        Err(CompGradError::Config(format!("step size eta must be positive, got {eta}")))
    }
}

/// `z - eta * g`.
pub(crate) fn apply_step(z: &IteratePoint, g: &CompetitiveGradient, eta: f64) -> IteratePoint {
    IteratePoint {
        x: &z.x - &g.gx * eta,
        y: &z.y - &g.gy * eta,
    }
}

/// Simultaneous gradient descent-ascent: `x - eta grad_x f`, `y + eta grad_y f`.
pub fn gda_step(oracle: &dyn ProblemOracle, z: &IteratePoint, eta: f64) -> Result<IteratePoint> {
    check_eta(eta)?;
    let g = competitive_gradient(oracle, z, 0.0, &SolveSettings::default())?;
    Ok(apply_step(z, &g, eta))
}

/// CGO with interaction weight `alpha`: `z - eta * g_alpha(z)`.
pub fn cgo_step(
    oracle: &dyn ProblemOracle,
    z: &IteratePoint,
    alpha: f64,
    eta: f64,
    solve: &SolveSettings,
) -> Result<IteratePoint> {
    check_eta(eta)?;
    let g = competitive_gradient(oracle, z, alpha, solve)?;
    Ok(apply_step(z, &g, eta))
}

/// Competitive gradient descent: CGO with `alpha = eta`.
pub fn cgd_step(oracle: &dyn ProblemOracle, z: &IteratePoint, eta: f64, solve: &SolveSettings) -> Result<IteratePoint> {
    cgo_step(oracle, z, eta, eta, solve)
}

/// Euclidean optimistic mirror descent-ascent (extra-gradient form).
///
/// `grad_at_z` may carry a precomputed `g_0(z)` to avoid re-evaluating it.
/// Both proximal stages are projected onto the oracle's domain box.
pub fn omda_step(
    oracle: &dyn ProblemOracle,
    grad_at_z: Option<&CompetitiveGradient>,
    z: &IteratePoint,
    eta: f64,
) -> Result<OptimisticStep> {
    check_eta(eta)?;
    let plain = SolveSettings::default();
    let owned;
    let g = match grad_at_z {
        Some(g) if g.alpha == 0.0 => g,
        Some(_) => {
            return Err(CompGradError::Config(
                "omda_step expects the plain gradient field (alpha = 0)".into(),
            ))
        }
        None => {
            owned = competitive_gradient(oracle, z, 0.0, &plain)?;
            &owned
        }
    };
    let domain = oracle.domain();
    let half = proximal_map(z, &(g.joint() * -eta), domain)?;
    let g_half = competitive_gradient(oracle, &half.point, 0.0, &plain)?;
    let next = proximal_map(z, &(g_half.joint() * -eta), domain)?;
    Ok(OptimisticStep {
        next: next.point,
        half: half.point,
        clamped: half.clamped || next.clamped,
    })
}

/// Optimistic CGO: `z_half = z - eta g_alpha(z)`, `z_next = z - eta g_alpha(z_half)`.
pub fn ocgo_step(
    oracle: &dyn ProblemOracle,
    z: &IteratePoint,
    alpha: f64,
    eta: f64,
    solve: &SolveSettings,
) -> Result<OptimisticStep> {
    check_eta(eta)?;
    let g = competitive_gradient(oracle, z, alpha, solve)?;
    ocgo_from_gradient(oracle, z, &g, eta, solve)
}

pub(crate) fn ocgo_from_gradient(
    oracle: &dyn ProblemOracle,
    z: &IteratePoint,
    g: &CompetitiveGradient,
    eta: f64,
    solve: &SolveSettings,
) -> Result<OptimisticStep> {
    let half = apply_step(z, g, eta);
    let g_half = competitive_gradient(oracle, &half, g.alpha, solve)?;
    Ok(OptimisticStep {
        next: apply_step(z, &g_half, eta),
        half,
        clamped: false,
    })
}
