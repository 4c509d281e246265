use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::competitive::{competitive_gradient, SolveSettings};
use crate::error::{check_dim, CompGradError, Result};
use crate::problems::{ensure_dims, DomainBox, IteratePoint, ProblemOracle};

const EXCLUSION_RADIUS: f64 = 1e-6;
const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    StrictlyCoherent,
    NullCoherent,
    CoherentNonstrict,
    Violated,
}

/// Sampling parameters shared by the variational-inequality probes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    pub region: DomainBox,
    pub samples: usize,
    pub seed: u64,
    /// Absolute tolerance; `None` uses `1e-9 (1 + ||z - z*||^2)` per sample.
    pub tol: Option<f64>,
    pub solve: SolveSettings,
}

impl ProbeOptions {
    pub fn new(region: DomainBox, samples: usize, seed: u64) -> Self {
        Self {
            region,
            samples,
            seed,
            tol: None,
            solve: SolveSettings::default(),
        }
    }

    fn validate(&self, z_star: &IteratePoint) -> Result<()> {
        if self.samples == 0 {
            return Err(CompGradError::Config("coherence.samples must be at least 1".into()));
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0) {
                return Err(CompGradError::Config(format!("coherence.tol must be non-negative, got {t}")));
            }
        }
        check_dim("probe region", z_star.len(), self.region.dim())?;
        if !self.region.contains(z_star) {
            return Err(CompGradError::Config("z_star lies outside the probe region".into()));
        }
        self.solve.validate()
    }

    fn tolerance(&self, dist_sq: f64) -> f64 {
        self.tol.unwrap_or(1e-9 * (1.0 + dist_sq))
    }

    /// Uniform draws from the region, rejecting a small ball around `z_star`.
    fn draw(&self, z_star: &IteratePoint) -> Result<Vec<IteratePoint>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (m, _) = z_star.dims();
        let radius = EXCLUSION_RADIUS * self.region.diameter();
        let mut out = Vec::with_capacity(self.samples);
        let mut rejected = 0usize;
        while out.len() < self.samples {
            let z = self.region.sample(m, &mut rng);
            if z.sub(z_star)?.norm() <= radius {
                rejected += 1;
                if rejected > MAX_REJECTIONS {
                    return Err(CompGradError::Config(
                        "probe region is too small to sample away from z_star".into(),
                    ));
                }
                continue;
            }
            out.push(z);
        }
        Ok(out)
    }
}

/// Sampled check of the alpha-MVI `<g_alpha(z), z - z*> >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub alpha: f64,
    pub min_inner: f64,
    pub max_abs_inner: f64,
    /// Extremes of `<g_alpha(z), z - z*> / ||z - z*||^2`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    #[serde(rename = "argmin")]
    pub argmin_point: IteratePoint,
    pub classification: Classification,
    pub samples: usize,
    /// Samples where `g_alpha` could not be computed; they are skipped.
    pub failed_samples: usize,
    pub seed: u64,
    pub region: DomainBox,
}

struct Sample {
    z: IteratePoint,
    inner: f64,
    ratio: f64,
    tol: f64,
}

/// Probes the Minty inequality on `options.samples` uniform points.
///
/// A sample is positive when its inner product exceeds its tolerance and
/// negative when it is below minus the tolerance. The classification is
/// `Violated` if any sample is negative, `StrictlyCoherent` if all are
/// positive, `NullCoherent` if all lie within tolerance of zero and
/// `CoherentNonstrict` otherwise.
pub fn mvi_probe(
    oracle: &dyn ProblemOracle,
    z_star: &IteratePoint,
    alpha: f64,
    options: &ProbeOptions,
) -> Result<CoherenceReport> {
    ensure_dims(oracle, z_star)?;
    options.validate(z_star)?;
    let points = options.draw(z_star)?;

    let evaluated: Vec<Option<Sample>> = points
        .into_par_iter()
        .map(|z| {
            let d = z.sub(z_star).ok()?;
            let g = match competitive_gradient(oracle, &z, alpha, &options.solve) {
                Ok(g) => g,
                Err(e) => {
                    log::debug!("coherence sample skipped: {e}");
                    return None;
                }
            };
            let inner = g.dot(&d);
            if !inner.is_finite() {
                return None;
            }
            let dist_sq = d.norm_squared();
            Some(Sample {
                tol: options.tolerance(dist_sq),
                ratio: inner / dist_sq,
                inner,
                z,
            })
        })
        .collect();

    let failed = evaluated.iter().filter(|s| s.is_none()).count();
    let ok: Vec<Sample> = evaluated.into_iter().flatten().collect();
    let Some(first) = ok.first() else {
        return Err(CompGradError::Numeric(format!(
            "all {} coherence samples failed to evaluate",
            options.samples
        )));
    };

    let mut argmin = first;
    let (mut max_abs, mut min_ratio, mut max_ratio) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    let (mut all_positive, mut any_negative, mut all_null) = (true, false, true);
    for s in &ok {
        if s.inner < argmin.inner {
            argmin = s;
        }
        max_abs = max_abs.max(s.inner.abs());
        min_ratio = min_ratio.min(s.ratio);
        max_ratio = max_ratio.max(s.ratio);
        all_positive &= s.inner > s.tol;
        any_negative |= s.inner < -s.tol;
        all_null &= s.inner.abs() <= s.tol;
    }
    let classification = if any_negative {
        Classification::Violated
    } else if all_positive {
        Classification::StrictlyCoherent
    } else if all_null {
        Classification::NullCoherent
    } else {
        Classification::CoherentNonstrict
    };

    Ok(CoherenceReport {
        alpha,
        min_inner: argmin.inner,
        max_abs_inner: max_abs,
        min_ratio,
        max_ratio,
        argmin_point: argmin.z.clone(),
        classification,
        samples: options.samples,
        failed_samples: failed,
        seed: options.seed,
        region: options.region.clone(),
    })
}

/// Stampacchia inequality `<g_alpha(z*), z - z*> >= 0` over the region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SviReport {
    pub alpha: f64,
    /// Minimum over the sampled points.
    pub sampled_min: f64,
    /// Exact minimum over the region (attained at a vertex).
    pub region_min: f64,
    pub g_norm_at_z_star: f64,
    pub samples: usize,
    pub seed: u64,
}

pub fn svi_residual(
    oracle: &dyn ProblemOracle,
    z_star: &IteratePoint,
    alpha: f64,
    options: &ProbeOptions,
) -> Result<SviReport> {
    ensure_dims(oracle, z_star)?;
    options.validate(z_star)?;
    let g = competitive_gradient(oracle, z_star, alpha, &options.solve)?;
    let gj = g.joint();
    let zj = z_star.joint();

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let (m, _) = z_star.dims();
    let mut sampled_min = f64::INFINITY;
    for _ in 0..options.samples {
        let z = options.region.sample(m, &mut rng);
        sampled_min = sampled_min.min(gj.dot(&(z.joint() - &zj)));
    }
    let region_min = options
        .region
        .bounds()
        .iter()
        .zip(gj.iter().zip(zj.iter()))
        .map(|(&(lo, hi), (&gi, &zi))| gi * (if gi > 0.0 { lo } else { hi } - zi))
        .sum();

    Ok(SviReport {
        alpha,
        sampled_min,
        region_min,
        g_norm_at_z_star: g.norm(),
        samples: options.samples,
        seed: options.seed,
    })
}
