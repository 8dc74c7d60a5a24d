//! Uniform point clouds, horizon families, pre-cracks and point sets.

use std::ops::Range;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::damage::BondState;
use crate::error::{Error, Result};

/// Default horizon padding in units of the point spacing.
pub const DEFAULT_EPS_DELTA: f64 = 0.015;

/// Material points of the reference configuration.
#[derive(Debug, Clone)]
pub struct PointCloud {
    pub positions: Vec<Vector3<f64>>,
    pub volumes: Vec<f64>,
    pub spacing: f64,
    /// Grid counts along x, y, z. `[N, 1, 1]` for clouds that are not grids.
    pub counts: [usize; 3],
}

impl PointCloud {
    /// Wraps arbitrary points; `spacing` is the length scale used for the horizon.
    pub fn from_points(positions: Vec<Vector3<f64>>, volumes: Vec<f64>, spacing: f64) -> Result<Self> {
        if positions.len() != volumes.len() {
            return Err(Error::Domain("positions and volumes differ in length".into()));
        }
        if !(spacing > 0.0) {
            return Err(Error::Domain(format!("spacing must be positive, got {spacing}")));
        }
        if let Some(i) = volumes.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Domain(format!("volume of point {i} is not positive")));
        }
        let n = positions.len();
        Ok(Self {
            positions,
            volumes,
            spacing,
            counts: [n, 1, 1],
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Linear index of grid cell `(ix, iy, iz)`; x varies fastest.
    pub fn index_of(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.counts[0] * (ijk[1] + self.counts[1] * ijk[2])
    }

    pub fn translated(mut self, offset: Vector3<f64>) -> Self {
        for p in &mut self.positions {
            *p += offset;
        }
        self
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for p in &self.positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }
}

/// Regular grid of cell-centred points filling a box centred at the origin.
pub fn generate_grid(box_size: [f64; 3], spacing: f64) -> Result<PointCloud> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Domain(format!("spacing must be positive, got {spacing}")));
    }
    let mut counts = [0usize; 3];
    for (c, &l) in counts.iter_mut().zip(&box_size) {
        // half a cell of slack against round-off in L/Δx
        if !(l.is_finite() && l >= spacing * (1.0 - 1e-9)) {
            return Err(Error::Domain(format!(
                "box edge {l} is smaller than the spacing {spacing}"
            )));
        }
        *c = (l / spacing).round() as usize;
    }
    let n = counts.iter().product();
    let mut positions = Vec::with_capacity(n);
    let origin: Vector3<f64> = Vector3::new(
        -(counts[0] as f64) * spacing * 0.5,
        -(counts[1] as f64) * spacing * 0.5,
        -(counts[2] as f64) * spacing * 0.5,
    );
    for k in 0..counts[2] {
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                positions.push(
                    origin
                        + Vector3::new(
                            (i as f64 + 0.5) * spacing,
                            (j as f64 + 0.5) * spacing,
                            (k as f64 + 0.5) * spacing,
                        ),
                );
            }
        }
    }
    Ok(PointCloud {
        positions,
        volumes: vec![spacing * spacing * spacing; n],
        spacing,
        counts,
    })
}

/// Directed bond storage: every ordered pair (i, j) with j in the family of i.
#[derive(Debug, Clone)]
pub struct NeighborSystem {
    pub horizon: f64,
    pub horizon_ratio: f64,
    pub eps_delta: f64,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    bond_vectors: Vec<Vector3<f64>>,
    bond_lengths: Vec<f64>,
    reverse: Vec<u32>,
}

impl NeighborSystem {
    fn from_lists(cloud: &PointCloud, lists: Vec<Vec<u32>>, horizon: f64, m: f64, eps: f64) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let total: usize = lists.iter().map(Vec::len).sum();
        let mut neighbors = Vec::with_capacity(total);
        let mut bond_vectors = Vec::with_capacity(total);
        let mut bond_lengths = Vec::with_capacity(total);
        for (i, list) in lists.iter().enumerate() {
            for &j in list {
                let xi = cloud.positions[j as usize] - cloud.positions[i];
                neighbors.push(j);
                bond_lengths.push(xi.norm());
                bond_vectors.push(xi);
            }
            offsets.push(neighbors.len());
        }
        let mut reverse = vec![u32::MAX; total];
        for i in 0..lists.len() {
            for b in offsets[i]..offsets[i + 1] {
                let j = neighbors[b] as usize;
                let fam = &neighbors[offsets[j]..offsets[j + 1]];
                if let Ok(pos) = fam.binary_search(&(i as u32)) {
                    reverse[b] = (offsets[j] + pos) as u32;
                }
            }
        }
        Self {
            horizon,
            horizon_ratio: m,
            eps_delta: eps,
            offsets,
            neighbors,
            bond_vectors,
            bond_lengths,
            reverse,
        }
    }

    pub fn n_points(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_bonds(&self) -> usize {
        self.neighbors.len()
    }

    /// Bond index range of the family of `i`.
    #[inline]
    pub fn family(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn neighbors_of(&self, i: usize) -> &[u32] {
        &self.neighbors[self.family(i)]
    }

    #[inline]
    pub fn neighbor(&self, bond: usize) -> usize {
        self.neighbors[bond] as usize
    }

    #[inline]
    pub fn bond_vector(&self, bond: usize) -> &Vector3<f64> {
        &self.bond_vectors[bond]
    }

    #[inline]
    pub fn bond_length(&self, bond: usize) -> f64 {
        self.bond_lengths[bond]
    }

    /// Index of the opposite bond (j, i) of `bond` = (i, j).
    #[inline]
    pub fn reverse(&self, bond: usize) -> usize {
        self.reverse[bond] as usize
    }

    /// Owner point of every bond, in bond order.
    pub fn owners(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.n_bonds());
        for i in 0..self.n_points() {
            out.extend(std::iter::repeat_n(i as u32, self.family(i).len()));
        }
        out
    }
}

/// Builds the horizon families with a uniform cell list of cell size ≥ δ.
pub fn build_neighborhoods(cloud: &PointCloud, horizon_ratio: f64, eps_delta: f64) -> Result<NeighborSystem> {
    if !(horizon_ratio >= 1.0) {
        return Err(Error::Domain(format!(
            "horizon ratio must be at least 1, got {horizon_ratio}"
        )));
    }
    let horizon = (horizon_ratio + eps_delta) * cloud.spacing;
    let lists = cell_list_families(&cloud.positions, horizon);
    Ok(NeighborSystem::from_lists(cloud, lists, horizon, horizon_ratio, eps_delta))
}

fn cell_list_families(positions: &[Vector3<f64>], horizon: f64) -> Vec<Vec<u32>> {
    let n = positions.len();
    if n == 0 {
        return Vec::new();
    }
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in positions {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let cell = horizon;
    let dims: [usize; 3] = std::array::from_fn(|a| (((hi[a] - lo[a]) / cell).floor() as usize) + 1);
    let cell_of = |p: &Vector3<f64>| -> [usize; 3] {
        std::array::from_fn(|a| (((p[a] - lo[a]) / cell).floor() as usize).min(dims[a] - 1))
    };
    let linear = |c: [usize; 3]| c[0] + dims[0] * (c[1] + dims[1] * c[2]);
    let n_cells = dims[0] * dims[1] * dims[2];

    // counting sort of points into cells
    let mut cell_start = vec![0usize; n_cells + 1];
    let point_cells: Vec<usize> = positions.iter().map(|p| linear(cell_of(p))).collect();
    for &c in &point_cells {
        cell_start[c + 1] += 1;
    }
    for c in 0..n_cells {
        cell_start[c + 1] += cell_start[c];
    }
    let mut fill = cell_start.clone();
    let mut sorted = vec![0u32; n];
    for (i, &c) in point_cells.iter().enumerate() {
        sorted[fill[c]] = i as u32;
        fill[c] += 1;
    }

    let r2 = horizon * horizon;
    let mut lists = vec![Vec::new(); n];
    for (i, p) in positions.iter().enumerate() {
        let c = cell_of(p);
        let list = &mut lists[i];
        for cz in c[2].saturating_sub(1)..(c[2] + 2).min(dims[2]) {
            for cy in c[1].saturating_sub(1)..(c[1] + 2).min(dims[1]) {
                for cx in c[0].saturating_sub(1)..(c[0] + 2).min(dims[0]) {
                    let lc = linear([cx, cy, cz]);
                    for &j in &sorted[cell_start[lc]..cell_start[lc + 1]] {
                        if j as usize == i {
                            continue;
                        }
                        let d2 = (positions[j as usize] - p).norm_squared();
                        if d2 > 0.0 && d2 <= r2 {
                            list.push(j);
                        }
                    }
                }
            }
        }
        list.sort_unstable();
    }
    lists
}

/// O(N²) reference family search, used to check the cell list.
pub fn brute_force_families(positions: &[Vector3<f64>], horizon: f64) -> Vec<Vec<u32>> {
    let r2 = horizon * horizon;
    positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            positions
                .iter()
                .enumerate()
                .filter(|&(j, q)| {
                    let d2 = (q - p).norm_squared();
                    j != i && d2 > 0.0 && d2 <= r2
                })
                .map(|(j, _)| j as u32)
                .collect()
        })
        .collect()
}

/// An infinitely thin planar notch. Bonds whose endpoints lie strictly on
/// opposite sides of the plane and whose crossing point falls inside the
/// axis-aligned bounds are broken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchPlane {
    pub point: [f64; 3],
    pub normal: [f64; 3],
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl NotchPlane {
    /// Returns true if the bond from `a` to `b` crosses the notch.
    pub fn cuts(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
        let p = Vector3::from(self.point);
        let n = Vector3::from(self.normal);
        let za = (a - p).dot(&n);
        let zb = (b - p).dot(&n);
        if !(za * zb < 0.0) {
            return false;
        }
        let t = za / (za - zb);
        let c = a + (b - a) * t;
        (0..3).all(|k| {
            let tol = 1e-12 * (self.max[k] - self.min[k]).abs().max(1.0);
            c[k] >= self.min[k] - tol && c[k] <= self.max[k] + tol
        })
    }
}

/// Breaks every bond crossing the notch; returns the number of bonds changed.
pub fn apply_precrack(cloud: &PointCloud, neigh: &NeighborSystem, bonds: &mut BondState, notch: &NotchPlane) -> usize {
    let mut changed = 0;
    for i in 0..neigh.n_points() {
        for b in neigh.family(i) {
            let j = neigh.neighbor(b);
            // canonical endpoint order keeps the cut decision symmetric
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            if notch.cuts(&cloud.positions[lo], &cloud.positions[hi]) && !bonds.is_precracked(b) {
                bonds.break_bond(b);
                changed += 1;
            }
        }
    }
    changed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Low,
    High,
}

/// Geometric selectors for point sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    All,
    Box { min: [f64; 3], max: [f64; 3] },
    /// The first `count` grid layers from the low or high face along `axis`.
    Layers { axis: usize, side: Side, count: usize },
    Intersect { regions: Vec<Region> },
    Union { regions: Vec<Region> },
}

impl Region {
    fn contains(&self, cloud: &PointCloud, bbox: &(Vector3<f64>, Vector3<f64>), i: usize) -> bool {
        let p = &cloud.positions[i];
        match self {
            Region::All => true,
            Region::Box { min, max } => (0..3).all(|k| p[k] >= min[k] && p[k] <= max[k]),
            Region::Layers { axis, side, count } => {
                let depth = match side {
                    Side::Low => p[*axis] - bbox.0[*axis],
                    Side::High => bbox.1[*axis] - p[*axis],
                };
                (*count as f64) > 0.0 && depth < (*count as f64 - 0.5) * cloud.spacing
            }
            Region::Intersect { regions } => regions.iter().all(|r| r.contains(cloud, bbox, i)),
            Region::Union { regions } => regions.iter().any(|r| r.contains(cloud, bbox, i)),
        }
    }
}

/// Named, sorted, duplicate-free set of point indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    pub name: String,
    pub indices: Vec<usize>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Dense membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }
}

pub fn tag_point_set(cloud: &PointCloud, name: &str, region: &Region) -> PointSet {
    let bbox = cloud.bounding_box();
    let indices: Vec<usize> = (0..cloud.len()).filter(|&i| region.contains(cloud, &bbox, i)).collect();
    if indices.is_empty() {
        log::warn!("point set `{name}` is empty");
    }
    PointSet {
        name: name.to_string(),
        indices,
    }
}
