//! Explicit velocity-Verlet stepping and its stability estimate.

use nalgebra::Vector3;

use crate::discretization::PointCloud;
use crate::error::{Error, Result};
use crate::material::MaterialParams;

use super::bc::{apply_dirichlet, apply_neumann, zero_dirichlet_acceleration, BoundaryCondition};
use super::SimState;

pub const DEFAULT_SAFETY: f64 = 0.5;

/// Δt = safety · Δx / c_d.
pub fn stable_time_step(cloud: &PointCloud, mat: &MaterialParams, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety.is_finite()) {
        return Err(Error::config("safety", format!("must be positive, got {safety}")));
    }
    Ok(safety * cloud.spacing / mat.dilatational_wave_speed)
}

/// Advances the state by one step. `force_eval` receives the new
/// displacement field and must fill `b_int`.
pub fn velocity_verlet_step<F>(
    state: &mut SimState,
    dt: f64,
    rho: f64,
    bcs: &[BoundaryCondition],
    mut force_eval: F,
) -> Result<()>
where
    F: FnMut(&[Vector3<f64>], usize, &mut [Vector3<f64>]) -> Result<()>,
{
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    let half = 0.5 * dt;
    for (v, a) in state.v.iter_mut().zip(&state.a) {
        *v += a * half;
    }
    apply_dirichlet(&mut state.v, bcs, state.t + half);
    for (u, v) in state.u.iter_mut().zip(&state.v) {
        *u += v * dt;
    }
    state.t += dt;
    state.step += 1;
    apply_neumann(&mut state.b_ext, bcs, state.t);
    force_eval(&state.u, state.step, &mut state.b_int)?;
    let inv_rho = 1.0 / rho;
    for ((a, bi), be) in state.a.iter_mut().zip(&state.b_int).zip(&state.b_ext) {
        *a = (bi + be) * inv_rho;
    }
    zero_dirichlet_acceleration(&mut state.a, bcs);
    for (v, a) in state.v.iter_mut().zip(&state.a) {
        *v += a * half;
    }
    apply_dirichlet(&mut state.v, bcs, state.t);
    state.check_finite()
}
