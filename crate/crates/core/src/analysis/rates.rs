use serde::{Deserialize, Serialize};

use super::SpectralSummary;
use crate::error::{CompGradError, Result};
use crate::problems::LipschitzConstants;

fn interaction(lam: f64, alpha: f64) -> f64 {
    lam / (1.0 + alpha * alpha * lam)
}

/// Exponential rate of `||g_0||^2` along the continuous-time CGO flow.
///
/// Returned as written; a non-positive value means the sufficient condition
/// does not certify convergence.
pub fn rate_continuous(s: &SpectralSummary, alpha: f64, beta: f64) -> f64 {
    let c = beta * (alpha - 2.0 * alpha * alpha * s.lam_bar_1 - 2.0 * alpha.powi(3) * s.lam_bar_2.powi(2));
    let x_branch = 2.0 * s.lam_xx_min - 2.0 * alpha * s.lam_xx_max.powi(2) + c * interaction(s.lam_xy_min, alpha);
    let y_branch = -2.0 * s.lam_yy_max - 2.0 * alpha * s.lam_yy_max.powi(2) + c * interaction(s.lam_yx_min, alpha);
    beta * x_branch.min(y_branch)
}

/// Local linear-rate constant of discrete CGO.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteRate {
    /// Rate with the interaction coefficient `c = -k`, the orientation under
    /// which `k` enters the one-step bound on `||grad f||^2`.
    pub lambda: f64,
    /// Interaction coefficient used for `lambda`.
    pub c: f64,
    /// The polynomial `k(eta, alpha, lam_bar_1, lam_bar_2)`.
    pub k: f64,
    /// Rate obtained with `c = +k` instead.
    pub lambda_with_positive_k: f64,
}

impl DiscreteRate {
    /// Whether `0 < lambda <= 1`, the regime where `1 - lambda` is a contraction factor.
    pub fn certifies_contraction(&self) -> bool {
        self.lambda > 0.0 && self.lambda <= 1.0
    }
}

pub fn rate_discrete(s: &SpectralSummary, alpha: f64, eta: f64) -> Result<DiscreteRate> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(CompGradError::Config(format!("rate_discrete needs eta > 0, got {eta}")));
    }
    let w = (10.0 * eta + 8.0 * alpha) / eta;
    let x_pure = eta * (2.0 * s.lam_xx_min - 2.0 * w * s.lam_xx_max.powi(2));
    let y_pure = -eta * (2.0 * s.lam_yy_min + 2.0 * w * s.lam_yy_max.powi(2));
    let k = eta * ((11.0 * eta + 16.0 * alpha * alpha * s.lam_bar_1) / 8.0 - 15.0 * alpha / 8.0)
        + 2.0 * (10.0 * eta + 8.0 * alpha) * alpha * alpha * eta * s.lam_bar_2.powi(2);
    let ix = interaction(s.lam_xy_min, alpha);
    let iy = interaction(s.lam_yx_min, alpha);
    let lam = |c: f64| (x_pure + c * ix).min(y_pure + c * iy);
    Ok(DiscreteRate {
        lambda: lam(-k),
        c: -k,
        k,
        lambda_with_positive_k: lam(k),
    })
}

/// Step-size bound for a given `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaBound {
    pub value: f64,
    /// False when the radicand is negative or the numerator is non-positive;
    /// `value` is then 0.
    pub admissible: bool,
}

/// Admissible parameter region for optimistic CGO on an alpha-coherent problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcgoBounds {
    /// Strict upper bound on `alpha^2`.
    pub alpha_sq_max: f64,
    pub l: f64,
    pub l_prime: f64,
    pub l_xy: f64,
}

impl OcgoBounds {
    pub fn alpha_admissible(&self, alpha: f64) -> bool {
        alpha != 0.0 && alpha * alpha < self.alpha_sq_max
    }

    /// Strict upper bound on every `eta_n` when running with `alpha`.
    /// The constant multiplying `alpha^3` is taken to be the function
    /// Lipschitz constant `l`.
    pub fn eta_max(&self, alpha: f64) -> EtaBound {
        let (l2, lp2, lxy2) = (self.l * self.l, self.l_prime * self.l_prime, self.l_xy * self.l_xy);
        let a2 = alpha * alpha;
        let radicand = a2 * l2 * lxy2 + lp2 - 2.0 * a2 * a2 * l2 * lp2 * lxy2 - a2 * lp2 * lp2;
        let denom = a2 * l2 * lxy2 + lp2;
        if !(radicand >= 0.0) {
            return EtaBound {
                value: 0.0,
                admissible: false,
            };
        }
        let numer = radicand.sqrt() - alpha.powi(3) * l2 * lxy2;
        if !(numer > 0.0) {
            return EtaBound {
                value: 0.0,
                admissible: false,
            };
        }
        EtaBound {
            value: numer / denom,
            admissible: true,
        }
    }
}

/// Parameter bounds for optimistic CGO from the problem's Lipschitz constants.
///
/// `alpha_sq_max = (sqrt(L'^4 + 4x) - L'^2) / (2x)` with `x = L_xy^2 L^2`,
/// evaluated in the rationalised form `2 / (sqrt(L'^4 + 4x) + L'^2)` so the
/// `x -> 0` limit `1 / L'^2` is exact.
pub fn ocgo_param_bounds(c: &LipschitzConstants) -> Result<OcgoBounds> {
    c.validate()?;
    if !(c.l_prime > 0.0) {
        return Err(CompGradError::Config("ocgo_param_bounds needs l_prime > 0".into()));
    }
    let lp2 = c.l_prime * c.l_prime;
    let x = c.l_xy * c.l_xy * c.l * c.l;
    let alpha_sq_max = 2.0 / ((lp2 * lp2 + 4.0 * x).sqrt() + lp2);
    Ok(OcgoBounds {
        alpha_sq_max,
        l: c.l,
        l_prime: c.l_prime,
        l_xy: c.l_xy,
    })
}
