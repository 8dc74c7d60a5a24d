//! Crack-tip extraction from point damage fields.
//!
//! The tip is the damaged point (D ≥ threshold) inside a search box that lies
//! furthest along the advance direction, or furthest from the origin. Speeds
//! come from centred differences over the recorded trace followed by a
//! three-sample moving average.

use nalgebra::{Matrix2, Vector2, Vector3};

use crate::discretization::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TipMeasure {
    /// Maximize (x − origin) · direction.
    Advance(Vector3<f64>),
    /// Maximize |x − origin|.
    Distance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingSpec {
    pub origin: Vector3<f64>,
    pub measure: TipMeasure,
    pub region_min: Vector3<f64>,
    pub region_max: Vector3<f64>,
    pub threshold: f64,
}

impl TrackingSpec {
    fn in_region(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|k| p[k] >= self.region_min[k] && p[k] <= self.region_max[k])
    }

    fn score(&self, p: &Vector3<f64>) -> f64 {
        match self.measure {
            TipMeasure::Advance(d) => (p - self.origin).dot(&d),
            TipMeasure::Distance => (p - self.origin).norm(),
        }
    }
}

/// Current tip position, or `None` when nothing in the region is damaged.
/// Ties keep the lowest point index.
pub fn track_crack_tip(damage: &[f64], cloud: &PointCloud, spec: &TrackingSpec) -> Option<Vector3<f64>> {
    let mut best: Option<(f64, usize)> = None;
    for (i, (&d, p)) in damage.iter().zip(&cloud.positions).enumerate() {
        if d >= spec.threshold && spec.in_region(p) {
            let s = spec.score(p);
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, i));
            }
        }
    }
    best.map(|(_, i)| cloud.positions[i])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub t: f64,
    pub tip: Option<Vector3<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrackTipTrace {
    pub entries: Vec<TraceEntry>,
}

impl CrackTipTrace {
    pub fn push(&mut self, t: f64, tip: Option<Vector3<f64>>) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if !(t > last.t) {
                return Err(Error::Domain(format!("trace time {t} does not follow {}", last.t)));
            }
        }
        self.entries.push(TraceEntry { t, tip });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// In-plane (x–y) tip speed: centred differences where both neighbours
    /// have a tip, one-sided otherwise; 0 at the first sample and wherever no
    /// tip exists. The z coordinate is ignored since the tip may switch
    /// between thickness layers of a through-crack.
    pub fn raw_speeds(&self) -> Vec<f64> {
        let e = &self.entries;
        let n = e.len();
        (0..n)
            .map(|k| {
                if k == 0 || e[k].tip.is_none() {
                    return 0.0;
                }
                let prev = e[k - 1].tip.map(|p| (e[k - 1].t, p));
                let next = e.get(k + 1).and_then(|x| x.tip.map(|p| (x.t, p)));
                let here = (e[k].t, e[k].tip.unwrap());
                let (a, b) = match (prev, next) {
                    (Some(a), Some(b)) => (a, b),
                    (Some(a), None) => (a, here),
                    (None, Some(b)) => (here, b),
                    (None, None) => return 0.0,
                };
                (b.1 - a.1).xy().norm() / (b.0 - a.0)
            })
            .collect()
    }

    /// Three-sample centred moving average of [`raw_speeds`](Self::raw_speeds).
    pub fn smoothed_speeds(&self) -> Vec<f64> {
        let raw = self.raw_speeds();
        let n = raw.len();
        (0..n)
            .map(|k| {
                let lo = k.saturating_sub(1);
                let hi = (k + 1).min(n - 1);
                raw[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect()
    }

    pub fn max_smoothed_speed(&self) -> f64 {
        self.smoothed_speeds().into_iter().fold(0.0, f64::max)
    }
}

/// Counts separated damaged bands crossing lines of constant x.
///
/// Damage is projected onto the x–y grid (maximum over z). For every column
/// x ≥ `x_min` the damaged runs along y are counted, where runs closer than
/// `min_gap` empty cells merge. A count only counts if it persists over
/// three consecutive columns; the maximum is returned.
pub fn count_branch_lobes(damage: &[f64], cloud: &PointCloud, threshold: f64, x_min: f64, min_gap: usize) -> usize {
    let [nx, ny, nz] = cloud.counts;
    let mut runs = Vec::new();
    for i in 0..nx {
        if cloud.positions[cloud.index_of([i, 0, 0])].x < x_min {
            continue;
        }
        let mut count = 0;
        let mut gap = usize::MAX;
        for j in 0..ny {
            let hit = (0..nz).any(|k| damage[cloud.index_of([i, j, k])] >= threshold);
            if hit {
                if gap >= min_gap {
                    count += 1;
                }
                gap = 0;
            } else {
                gap = gap.saturating_add(1);
            }
        }
        runs.push(count);
    }
    runs.windows(3).map(|w| *w.iter().min().unwrap()).max().unwrap_or(0)
}

/// Angle in degrees between the x axis and the total-least-squares line
/// through the damaged points of the region.
pub fn crack_angle(damage: &[f64], cloud: &PointCloud, spec: &TrackingSpec) -> Option<(f64, usize)> {
    let pts: Vec<Vector2<f64>> = damage
        .iter()
        .zip(&cloud.positions)
        .filter(|(d, p)| **d >= spec.threshold && spec.in_region(p))
        .map(|(_, p)| Vector2::new(p.x, p.y))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let mean = pts.iter().sum::<Vector2<f64>>() / pts.len() as f64;
    let cov = pts.iter().fold(Matrix2::zeros(), |c, p| c + (p - mean) * (p - mean).transpose());
    let eig = cov.symmetric_eigen();
    let k = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
    let dir = eig.eigenvectors.column(k);
    Some((dir[0].abs().min(1.0).acos().to_degrees(), pts.len()))
}
