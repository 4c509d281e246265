use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, CompGradError, Result};

/// Joint iterate `z = (x, y)` of the minimising and maximising players.
#[derive(Debug, Clone, PartialEq)]
pub struct IteratePoint {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl IteratePoint {
    /// Builds a point, rejecting empty blocks and non-finite entries.
    pub fn new(x: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(CompGradError::Config(format!(
                "iterate blocks must be non-empty (got m = {}, n = {})",
                x.len(),
                y.len()
            )));
        }
        let point = Self { x, y };
        if !point.is_finite() {
            return Err(CompGradError::Evaluation {
                point: Box::new(point),
            });
        }
        Ok(point)
    }

    pub fn from_slices(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(x), DVector::from_column_slice(y))
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            x: DVector::zeros(m),
            y: DVector::zeros(n),
        }
    }

    /// Splits a stacked `(m + n)` vector into its two blocks.
    pub fn from_joint(m: usize, joint: &DVector<f64>) -> Result<Self> {
        if m == 0 || joint.len() <= m {
            return Err(CompGradError::Dimension {
                context: "joint vector split",
                expected: m + 1,
                got: joint.len(),
            });
        }
        Ok(Self {
            x: joint.rows(0, m).into_owned(),
            y: joint.rows(m, joint.len() - m).into_owned(),
        })
    }

    pub fn joint(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.x.len() + self.y.len());
        out.rows_mut(0, self.x.len()).copy_from(&self.x);
        out.rows_mut(self.x.len(), self.y.len()).copy_from(&self.y);
        out
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    pub fn len(&self) -> usize {
        self.x.len() + self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.x.norm_squared() + self.y.norm_squared()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &IteratePoint) -> f64 {
        self.x.dot(&other.x) + self.y.dot(&other.y)
    }

    pub fn sub(&self, other: &IteratePoint) -> Result<IteratePoint> {
        self.check_same_dims(other, "point difference")?;
        Ok(IteratePoint {
            x: &self.x - &other.x,
            y: &self.y - &other.y,
        })
    }

    pub(crate) fn check_same_dims(&self, other: &IteratePoint, context: &'static str) -> Result<()> {
        check_dim(context, self.x.len(), other.x.len())?;
        check_dim(context, self.y.len(), other.y.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.x.iter().chain(self.y.iter()).copied()
    }
}

#[derive(Serialize, Deserialize)]
struct PointRepr {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Serialize for IteratePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PointRepr {
            x: self.x.iter().copied().collect(),
            y: self.y.iter().copied().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IteratePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PointRepr::deserialize(deserializer)?;
        IteratePoint::from_slices(&repr.x, &repr.y).map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned box `[lo_i, hi_i]` over the joint coordinates `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainBox {
    bounds: Vec<(f64, f64)>,
}

impl DomainBox {
    pub const DEFAULT_HALF_WIDTH: f64 = 10.0;

    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(CompGradError::Config("domain box must have at least one coordinate".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(CompGradError::Config(format!(
                    "domain box coordinate {i} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { bounds })
    }

    /// `[-r, r]` on every one of the `dim` coordinates.
    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        Self {
            bounds: vec![(-half_width, half_width); dim],
        }
    }

    /// Default `[-10, 10]` box for an `m + n` dimensional game.
    pub fn default_for(m: usize, n: usize) -> Self {
        Self::symmetric(m + n, Self::DEFAULT_HALF_WIDTH)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, z: &IteratePoint) -> bool {
        z.len() == self.dim()
            && z.iter()
                .zip(&self.bounds)
                .all(|(v, &(lo, hi))| v >= lo && v <= hi)
    }

    /// Projects `z` onto the box; the flag reports whether any coordinate moved.
    pub fn clamp(&self, z: &IteratePoint) -> Result<(IteratePoint, bool)> {
        check_dim("domain clamp", self.dim(), z.len())?;
        let m = z.x.len();
        let mut clamped = false;
        let mut clip = |v: f64, (lo, hi): (f64, f64)| {
            let c = v.clamp(lo, hi);
            if c != v {
                clamped = true;
            }
            c
        };
        let x = DVector::from_iterator(m, z.x.iter().zip(&self.bounds[..m]).map(|(&v, &b)| clip(v, b)));
        let y = DVector::from_iterator(
            z.y.len(),
            z.y.iter().zip(&self.bounds[m..]).map(|(&v, &b)| clip(v, b)),
        );
        Ok((IteratePoint { x, y }, clamped))
    }

    /// Euclidean norm of the farthest-from-origin corner.
    pub fn max_norm(&self) -> f64 {
        self.bounds
            .iter()
            .map(|&(lo, hi)| {
                let r = lo.abs().max(hi.abs());
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest Euclidean norm of the `x` block (first `m` coordinates) and the `y` block.
    pub fn max_block_norms(&self, m: usize) -> (f64, f64) {
        let block = |b: &[(f64, f64)]| {
            b.iter()
                .map(|&(lo, hi)| lo.abs().max(hi.abs()).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        (block(&self.bounds[..m]), block(&self.bounds[m..]))
    }

    /// Length of the main diagonal.
    pub fn diameter(&self) -> f64 {
        self.bounds
            .iter()
            .map(|&(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    /// Uniform sample over the box, split as `(x, y)` with `x` of length `m`.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> IteratePoint {
        let coords: Vec<f64> = self
            .bounds
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect();
        IteratePoint {
            x: DVector::from_column_slice(&coords[..m]),
            y: DVector::from_column_slice(&coords[m..]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite_points() {
        assert!(IteratePoint::from_slices(&[], &[1.0]).is_err());
        assert!(matches!(
            IteratePoint::from_slices(&[f64::NAN], &[1.0]),
            Err(CompGradError::Evaluation { .. })
        ));
    }

    #[test]
    fn joint_round_trip() {
        let z = IteratePoint::from_slices(&[1.0, 2.0], &[3.0]).unwrap();
        let back = IteratePoint::from_joint(2, &z.joint()).unwrap();
        assert_eq!(z, back);
    }

    #[test]
    fn clamp_reports_movement() {
        let domain = DomainBox::symmetric(2, 1.0);
        let inside = IteratePoint::from_slices(&[0.5], &[-0.5]).unwrap();
        let (p, flag) = domain.clamp(&inside).unwrap();
        assert_eq!(p, inside);
        assert!(!flag);
        let outside = IteratePoint::from_slices(&[1.5], &[-0.5]).unwrap();
        let (p, flag) = domain.clamp(&outside).unwrap();
        assert_eq!(p.x[0], 1.0);
        assert!(flag);
    }

    #[test]
    fn invalid_box_rejected() {
        assert!(DomainBox::new(vec![(1.0, -1.0)]).is_err());
        assert!(DomainBox::new(vec![]).is_err());
    }

    #[test]
    fn point_json_shape() {
        let z = IteratePoint::from_slices(&[1.0], &[2.0, 3.0]).unwrap();
        let s = serde_json::to_string(&z).unwrap();
        assert_eq!(s, r#"{"x":[1.0],"y":[2.0,3.0]}"#);
        let back: IteratePoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back, z);
    }
}
