use serde::{Deserialize, Serialize};

use crate::error::{CompGradError, Result};

/// Step sizes `eta_n` for `n = 1, 2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant { eta: f64 },
    /// `eta_n = c / (n + n0)^p` with `p` in `(0.5, 1]`, so that the steps sum
    /// to infinity while their squares stay summable.
    RobbinsMonro {
        #[serde(default = "rm_c")]
        c: f64,
        #[serde(default = "rm_n0")]
        n0: f64,
        #[serde(default = "rm_p")]
        p: f64,
    },
}

fn rm_c() -> f64 {
    0.5
}

fn rm_n0() -> f64 {
    10.0
}

fn rm_p() -> f64 {
    1.0
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Constant { eta: 0.05 }
    }
}

/// Validated Robbins-Monro schedule.
pub fn robbins_monro_schedule(c: f64, n0: f64, p: f64) -> Result<StepSchedule> {
    let s = StepSchedule::RobbinsMonro { c, n0, p };
    s.validate()?;
    Ok(s)
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Constant { eta } => {
                if !(eta.is_finite() && eta > 0.0) {
                    return Err(CompGradError::Config(format!("schedule.eta must be positive, got {eta}")));
                }
            }
            StepSchedule::RobbinsMonro { c, n0, p } => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(CompGradError::Config(format!("schedule.c must be positive, got {c}")));
                }
                if !(n0.is_finite() && n0 >= 0.0) {
                    return Err(CompGradError::Config(format!("schedule.n0 must be non-negative, got {n0}")));
                }
                if !(p > 0.5 && p <= 1.0) {
                    return Err(CompGradError::Config(format!(
                        "schedule.p must lie in (0.5, 1] for sum(eta) = inf and sum(eta^2) < inf, got {p}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Step size for the `n`-th step (`n >= 1`).
    pub fn eta(&self, n: usize) -> f64 {
        match *self {
            StepSchedule::Constant { eta } => eta,
            StepSchedule::RobbinsMonro { c, n0, p } => c / (n as f64 + n0).powf(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_schedule() {
        let s = robbins_monro_schedule(1.0, 0.0, 1.0).unwrap();
        assert_eq!(s.eta(1), 1.0);
        assert_eq!(s.eta(2), 0.5);
        assert_eq!(s.eta(4), 0.25);
    }

    #[test]
    fn three_quarter_power() {
        let s = robbins_monro_schedule(1.0, 0.0, 0.75).unwrap();
        assert!((s.eta(16) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_square_summable_boundary() {
        assert!(robbins_monro_schedule(1.0, 0.0, 0.5).is_err());
        assert!(robbins_monro_schedule(1.0, 0.0, 1.01).is_err());
        assert!(robbins_monro_schedule(0.0, 0.0, 1.0).is_err());
        assert!(robbins_monro_schedule(1.0, -1.0, 1.0).is_err());
        assert!(StepSchedule::Constant { eta: 0.0 }.validate().is_err());
    }

    #[test]
    fn json_shape() {
        let s: StepSchedule = serde_json::from_str(r#"{"kind":"robbins_monro","c":0.5,"n0":10,"p":1}"#).unwrap();
        assert_eq!(s, StepSchedule::RobbinsMonro { c: 0.5, n0: 10.0, p: 1.0 });
        let s: StepSchedule = serde_json::from_str(r#"{"kind":"constant","eta":0.2}"#).unwrap();
        assert_eq!(s.eta(7), 0.2);
        let s: StepSchedule = serde_json::from_str(r#"{"kind":"robbins_monro"}"#).unwrap();
        assert_eq!(s, StepSchedule::RobbinsMonro { c: 0.5, n0: 10.0, p: 1.0 });
    }
}
