//! Internal force density of the bond-associated correspondence model with
//! PFPD or critical-stretch damage.
//!
//! The constitutive update of a bond pair (i, j) is evaluated once, by the
//! endpoint with the smaller index; the reverse bond reuses it since both
//! directions share the same bond deformation gradient. Force states are
//! stored per bond and gathered per point as b_i = Σ_j (T_ij − T_ji) V_j, so
//! the result does not depend on the number of worker threads.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::damage::{bond_degradation, critical_stretch_check, driving_force_from_state, update_history_and_phasefield, BondState};
use crate::discretization::{NeighborSystem, PointCloud};
use crate::error::{Error, Result};
use crate::kinematics::{bond_deformation_gradient, kinematic_degradation, split_by_offsets, KinematicCache};
use crate::material::{svk_unchecked, MaterialParams};

use super::{DamageModel, ModelConfig};

/// Read-only inputs of a force evaluation.
#[derive(Clone, Copy)]
pub struct ForceContext<'a> {
    pub cloud: &'a PointCloud,
    pub neigh: &'a NeighborSystem,
    /// Averaged bond kernel Φ per bond.
    pub phi: &'a [f64],
    pub mat: &'a MaterialParams,
    pub model: &'a ModelConfig,
}

/// Scratch arrays reused across steps, plus the per-point outputs.
#[derive(Debug, Clone)]
pub struct ForceWorkspace {
    pub defgrad: Vec<Matrix3<f64>>,
    pk1: Vec<Matrix3<f64>>,
    bond_energy: Vec<f64>,
    s_new: Vec<f64>,
    history_new: Vec<f64>,
    force_state: Vec<Vector3<f64>>,
    /// Internal force density per point.
    pub b_int: Vec<Vector3<f64>>,
    /// Degraded strain energy density per point, Σ_j Φ g ψ₀ V_j.
    pub strain_energy: Vec<f64>,
    /// Σ_i |b_i| V_i of the last evaluation, a scale for momentum checks.
    pub force_scale: f64,
    /// Points whose cache was reassembled in the last evaluation.
    pub rebuilt: usize,
}

impl ForceWorkspace {
    pub fn new(neigh: &NeighborSystem) -> Self {
        let (n, nb) = (neigh.n_points(), neigh.n_bonds());
        Self {
            defgrad: vec![Matrix3::identity(); n],
            pk1: vec![Matrix3::zeros(); nb],
            bond_energy: vec![0.0; nb],
            s_new: vec![0.0; nb],
            history_new: vec![0.0; nb],
            force_state: vec![Vector3::zeros(); nb],
            b_int: vec![Vector3::zeros(); n],
            strain_energy: vec![0.0; n],
            force_scale: 0.0,
            rebuilt: 0,
        }
    }
}

/// Evaluates b_int for the configured damage model.
pub fn internal_force(
    ctx: &ForceContext,
    u: &[Vector3<f64>],
    bonds: &mut BondState,
    cache: &mut KinematicCache,
    ws: &mut ForceWorkspace,
    step: usize,
) -> Result<()> {
    match ctx.model.damage {
        DamageModel::Pfpd => internal_force_pfpd(ctx, u, bonds, cache, ws, step),
        DamageModel::CriticalStretch => internal_force_baqp(ctx, u, bonds, cache, ws, step),
    }
}

/// Critical-stretch model: bond failure (Step 0), cache rebuild where damage
/// changed (Step 1), deformation gradients (Step 2), stresses and forces (Step 3).
pub fn internal_force_baqp(
    ctx: &ForceContext,
    u: &[Vector3<f64>],
    bonds: &mut BondState,
    cache: &mut KinematicCache,
    ws: &mut ForceWorkspace,
    step: usize,
) -> Result<()> {
    let neigh = ctx.neigh;
    let eps_c = ctx.model.eps_c;
    {
        let BondState { active, exempt, .. } = bonds;
        let exempt = &*exempt;
        let KinematicCache { h, dirty, .. } = cache;
        let parts = split_by_offsets(active, neigh.offsets());
        let hs = split_by_offsets(h, neigh.offsets());
        parts
            .into_par_iter()
            .zip(hs)
            .zip(dirty.par_iter_mut())
            .enumerate()
            .for_each(|(i, ((act, hp), dirty))| {
                for (k, b) in neigh.family(i).enumerate() {
                    if !act[k] {
                        continue;
                    }
                    let j = neigh.neighbor(b);
                    let cur = (neigh.bond_vector(b) + (u[j] - u[i])).norm();
                    if !critical_stretch_check(neigh.bond_length(b), cur, eps_c, exempt[b], true) {
                        act[k] = false;
                    }
                    let hv = if act[k] { 1.0 } else { 0.0 };
                    if hp[k] != hv {
                        hp[k] = hv;
                        *dirty = true;
                    }
                }
            });
    }
    ws.rebuilt = cache.rebuild(neigh, &ctx.cloud.volumes);
    step3(ctx, u, bonds, cache, ws, step)
}

/// PFPD model: cache rebuild where h changed (Step 1), deformation gradients
/// (Step 2), bond stresses with the damage update and forces (Step 3).
pub fn internal_force_pfpd(
    ctx: &ForceContext,
    u: &[Vector3<f64>],
    bonds: &mut BondState,
    cache: &mut KinematicCache,
    ws: &mut ForceWorkspace,
    step: usize,
) -> Result<()> {
    ws.rebuilt = cache.rebuild(ctx.neigh, &ctx.cloud.volumes);
    step3(ctx, u, bonds, cache, ws, step)
}

fn step3(
    ctx: &ForceContext,
    u: &[Vector3<f64>],
    bonds: &mut BondState,
    cache: &mut KinematicCache,
    ws: &mut ForceWorkspace,
    step: usize,
) -> Result<()> {
    let neigh = ctx.neigh;
    let offsets = neigh.offsets();
    let vol = &ctx.cloud.volumes;
    let pfpd = ctx.model.damage == DamageModel::Pfpd;
    let lame = ctx.mat.lame();
    let (yc, youngs, s_c) = (ctx.mat.yc, ctx.mat.youngs, ctx.model.s_c);
    let mode = ctx.model.driving_force;

    ws.defgrad = cache.deformation_gradients(neigh, u);
    let defgrad = &ws.defgrad;

    // Phase A: constitutive update of every canonical bond (i < j).
    let failure: Option<Error> = {
        let bs = &*bonds;
        let pk1 = split_by_offsets(&mut ws.pk1, offsets);
        let en = split_by_offsets(&mut ws.bond_energy, offsets);
        let sn = split_by_offsets(&mut ws.s_new, offsets);
        let hn = split_by_offsets(&mut ws.history_new, offsets);
        pk1.into_par_iter()
            .zip(en)
            .zip(sn)
            .zip(hn)
            .enumerate()
            .map(|(i, (((pk1, en), sn), hn))| {
                for (k, b) in neigh.family(i).enumerate() {
                    let j = neigh.neighbor(b);
                    if j < i {
                        continue;
                    }
                    let (s_old, h_old) = (bs.s[b], bs.history[b]);
                    sn[k] = s_old;
                    hn[k] = h_old;
                    let carries = if pfpd { s_old < 1.0 } else { bs.active[b] };
                    if !carries {
                        pk1[k] = Matrix3::zeros();
                        en[k] = 0.0;
                        continue;
                    }
                    let xi = neigh.bond_vector(b);
                    let y = xi + (u[j] - u[i]);
                    let fb = bond_deformation_gradient(&defgrad[i], &defgrad[j], xi, &y);
                    let det = fb.determinant();
                    if !(det > 0.0) && (!pfpd || s_old <= s_c) {
                        return Some(Error::InvertedBond { point: i, neighbor: j, det });
                    }
                    let st = svk_unchecked(&fb, &lame);
                    let g = if pfpd {
                        let y_drive = driving_force_from_state(mode, &st, &fb, det, &lame, youngs);
                        let (h_new, s_new) = update_history_and_phasefield(y_drive, h_old, s_old, yc, bs.exempt[b]);
                        sn[k] = s_new;
                        hn[k] = h_new;
                        bond_degradation(s_new)
                    } else {
                        1.0
                    };
                    pk1[k] = st.pk1 * g;
                    en[k] = st.energy * g;
                }
                None
            })
            .find_first(Option::is_some)
            .flatten()
    };
    if let Some(e) = failure {
        return Err(e);
    }

    // Phase B: copy the pair update to both directions, non-uniform stress
    // and force states.
    {
        let (pk1, en, sn, hn) = (&ws.pk1, &ws.bond_energy, &ws.s_new, &ws.history_new);
        let (phi, grad) = (ctx.phi, &cache.grad_phi);
        let BondState { s, history, .. } = bonds;
        let KinematicCache { h, dirty, .. } = cache;
        let ss = split_by_offsets(s, offsets);
        let hs = split_by_offsets(history, offsets);
        let khs = split_by_offsets(h, offsets);
        let ts = split_by_offsets(&mut ws.force_state, offsets);
        ss.into_par_iter()
            .zip(hs)
            .zip(khs)
            .zip(ts)
            .zip(dirty.par_iter_mut())
            .zip(ws.strain_energy.par_iter_mut())
            .enumerate()
            .for_each(|(i, (((((sp, hp), khp), tp), dirty), w))| {
                let fam = neigh.family(i);
                let canon = |b: usize| if neigh.neighbor(b) > i { b } else { neigh.reverse(b) };
                let mut tnu = Matrix3::zeros();
                let mut wsum = 0.0;
                for (k, b) in fam.clone().enumerate() {
                    let c = canon(b);
                    if pfpd {
                        sp[k] = sn[c];
                        hp[k] = hn[c];
                        let hv = kinematic_degradation(sp[k], s_c);
                        if khp[k] != hv {
                            khp[k] = hv;
                            *dirty = true;
                        }
                    }
                    let p = &pk1[c];
                    let vj = vol[neigh.neighbor(b)];
                    wsum += phi[b] * en[c] * vj;
                    if p[(0, 0)] == 0.0 && p.iter().all(|x| *x == 0.0) {
                        continue;
                    }
                    let xi = neigh.bond_vector(b);
                    let n = xi / neigh.bond_length(b);
                    tnu += (p - (p * n) * n.transpose()) * (phi[b] * vj);
                }
                *w = wsum;
                for (k, b) in fam.enumerate() {
                    let c = canon(b);
                    let xi = neigh.bond_vector(b);
                    let vj = vol[neigh.neighbor(b)];
                    let direct = pk1[c] * xi * (phi[b] / neigh.bond_length(b).powi(2));
                    tp[k] = direct + tnu * grad[b] / vj;
                }
            });
    }

    // Phase C: gather b_i = Σ_j (T_ij − T_ji) V_j.
    let t = &ws.force_state;
    ws.b_int
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, bi)| {
            let mut acc = Vector3::zeros();
            for b in neigh.family(i) {
                acc += (t[b] - t[neigh.reverse(b)]) * vol[neigh.neighbor(b)];
            }
            *bi = acc;
        });
    if let Some(i) = ws.b_int.iter().position(|b| !(b.x.is_finite() && b.y.is_finite() && b.z.is_finite())) {
        return Err(Error::NonFinite { field: "b_int", point: i, step });
    }
    ws.force_scale = ws.b_int.iter().zip(vol).map(|(b, v)| b.norm() * v).sum();
    Ok(())
}
