//! Velocity-type Dirichlet and force-density Neumann boundary conditions.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::discretization::PointSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    DirichletVelocity,
    NeumannForceDensity,
}

/// Time dependence of a prescribed vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BcValue {
    Constant { value: [f64; 3] },
    /// Linear ramp from zero to `value` over `ramp_time`, constant afterwards.
    Ramp { value: [f64; 3], ramp_time: f64 },
}

impl BcValue {
    pub fn at(&self, t: f64) -> Vector3<f64> {
        match *self {
            BcValue::Constant { value } => Vector3::from(value),
            BcValue::Ramp { value, ramp_time } => {
                let f = if t <= ramp_time { t / ramp_time } else { 1.0 };
                Vector3::from(value) * f
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    pub kind: BcKind,
    pub set: PointSet,
    pub mask: [bool; 3],
    pub value: BcValue,
}

impl BoundaryCondition {
    pub fn dirichlet(set: PointSet, value: BcValue) -> Self {
        Self {
            kind: BcKind::DirichletVelocity,
            set,
            mask: [true; 3],
            value,
        }
    }

    pub fn neumann(set: PointSet, value: BcValue) -> Self {
        Self {
            kind: BcKind::NeumannForceDensity,
            set,
            mask: [true; 3],
            value,
        }
    }
}

/// Checks non-empty sets, a positive ramp time and that no component of a
/// point is prescribed by two Dirichlet conditions.
pub fn validate_bcs(bcs: &[BoundaryCondition], n_points: usize) -> Result<()> {
    let mut owner: Vec<[Option<usize>; 3]> = vec![[None; 3]; n_points];
    for (k, bc) in bcs.iter().enumerate() {
        if bc.set.is_empty() {
            return Err(Error::config(format!("bcs.{}", bc.set.name), "point set is empty"));
        }
        if let BcValue::Ramp { ramp_time, .. } = bc.value {
            if !(ramp_time > 0.0) {
                return Err(Error::config(format!("bcs.{}.ramp_time", bc.set.name), "must be positive"));
            }
        }
        if bc.set.indices.iter().any(|&i| i >= n_points) {
            return Err(Error::config(format!("bcs.{}", bc.set.name), "point index out of range"));
        }
        if bc.kind != BcKind::DirichletVelocity {
            continue;
        }
        for &i in &bc.set.indices {
            for c in 0..3 {
                if !bc.mask[c] {
                    continue;
                }
                if let Some(other) = owner[i][c] {
                    return Err(Error::config(
                        format!("bcs.{}", bc.set.name),
                        format!("overlaps Dirichlet set `{}` at point {i}, component {c}", bcs[other].set.name),
                    ));
                }
                owner[i][c] = Some(k);
            }
        }
    }
    Ok(())
}

/// Sets the masked velocity components of every Dirichlet set to value(t).
pub fn apply_dirichlet(v: &mut [Vector3<f64>], bcs: &[BoundaryCondition], t: f64) {
    for bc in bcs.iter().filter(|b| b.kind == BcKind::DirichletVelocity) {
        let val = bc.value.at(t);
        for &i in &bc.set.indices {
            for c in 0..3 {
                if bc.mask[c] {
                    v[i][c] = val[c];
                }
            }
        }
    }
}

/// Zeroes the masked acceleration components of every Dirichlet set.
pub fn zero_dirichlet_acceleration(a: &mut [Vector3<f64>], bcs: &[BoundaryCondition]) {
    for bc in bcs.iter().filter(|b| b.kind == BcKind::DirichletVelocity) {
        for &i in &bc.set.indices {
            for c in 0..3 {
                if bc.mask[c] {
                    a[i][c] = 0.0;
                }
            }
        }
    }
}

/// Rebuilds b_ext from the Neumann conditions at time t.
pub fn apply_neumann(b_ext: &mut [Vector3<f64>], bcs: &[BoundaryCondition], t: f64) {
    b_ext.iter_mut().for_each(|b| *b = Vector3::zeros());
    for bc in bcs.iter().filter(|b| b.kind == BcKind::NeumannForceDensity) {
        let val = bc.value.at(t);
        for &i in &bc.set.indices {
            for c in 0..3 {
                if bc.mask[c] {
                    b_ext[i][c] += val[c];
                }
            }
        }
    }
}
