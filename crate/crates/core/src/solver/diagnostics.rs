//! Global energy and force diagnostics.

use rayon::prelude::*;

use crate::damage::{bond_crack_dissipation, BondState};
use crate::discretization::{NeighborSystem, PointCloud};
use crate::error::{Error, Result};
use crate::material::MaterialParams;

use super::{DamageModel, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub t: f64,
    pub step: usize,
    pub kinetic: f64,
    pub strain: f64,
    /// Crack dissipation Σ_i V_i Σ_j Φ E_b^Γ V_j.
    pub crack: f64,
    /// |Σ_i b_int,i V_i|.
    pub net_internal_force: f64,
    pub max_speed: f64,
    pub max_damage: f64,
}

/// Σ_i V_i Σ_j Φ_ij G_c s_ij / (c₀ δ) V_j, optionally restricted to a point mask.
/// Critical-stretch bonds count as s = 1 once failed. Zero when G_c is infinite.
pub fn crack_dissipation(
    neigh: &NeighborSystem,
    volumes: &[f64],
    phi: &[f64],
    bonds: &BondState,
    mat: &MaterialParams,
    model: DamageModel,
    mask: Option<&[bool]>,
) -> f64 {
    if !mat.gc.is_finite() {
        return 0.0;
    }
    (0..neigh.n_points())
        .into_par_iter()
        .map(|i| {
            if mask.is_some_and(|m| !m[i]) {
                return 0.0;
            }
            let mut acc = 0.0;
            for b in neigh.family(i) {
                let s = match model {
                    DamageModel::Pfpd => bonds.s[b],
                    DamageModel::CriticalStretch => {
                        if bonds.active[b] {
                            0.0
                        } else {
                            1.0
                        }
                    }
                };
                if s > 0.0 {
                    acc += phi[b] * bond_crack_dissipation(s, mat) * volumes[neigh.neighbor(b)];
                }
            }
            acc * volumes[i]
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// Evaluates every scalar diagnostic; errors if any is not finite.
#[allow(clippy::too_many_arguments)]
pub fn global_diagnostics(
    state: &SimState,
    cloud: &PointCloud,
    neigh: &NeighborSystem,
    phi: &[f64],
    bonds: &BondState,
    mat: &MaterialParams,
    model: DamageModel,
    strain_energy: &[f64],
) -> Result<Diagnostics> {
    let vol = &cloud.volumes;
    let kinetic: f64 = state.v.iter().zip(vol).map(|(v, w)| 0.5 * mat.rho * v.norm_squared() * w).sum();
    let strain: f64 = strain_energy.iter().zip(vol).map(|(e, w)| e * w).sum();
    let crack = crack_dissipation(neigh, vol, phi, bonds, mat, model, None);
    let net = state
        .b_int
        .iter()
        .zip(vol)
        .fold(nalgebra::Vector3::zeros(), |acc, (b, w)| acc + b * *w)
        .norm();
    let max_speed = state.v.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let max_damage = state.damage.iter().copied().fold(0.0, f64::max);
    let d = Diagnostics {
        t: state.t,
        step: state.step,
        kinetic,
        strain,
        crack,
        net_internal_force: net,
        max_speed,
        max_damage,
    };
    for (name, x) in [("kinetic energy", kinetic), ("strain energy", strain), ("crack dissipation", crack)] {
        if !x.is_finite() {
            return Err(Error::NonFinite { field: name, point: usize::MAX, step: state.step });
        }
    }
    Ok(d)
}
