//! Explicit dynamics driver: state, force evaluation for both damage models,
//! time integration, boundary conditions and diagnostics.

pub mod bc;
pub mod diagnostics;
pub mod force;
pub mod integrator;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::damage::{self, BondState, DrivingForce};
use crate::discretization::{NeighborSystem, PointCloud, PointSet};
use crate::error::{Error, Result};
use crate::kernels::{averaged_bond_kernels, discrete_kernel_integrals, KernelSpec};
use crate::kinematics::{kinematic_degradation, Basis, KinematicCache};
use crate::material::{EnergySplit, MaterialParams};

pub use bc::{BcKind, BcValue, BoundaryCondition};
pub use diagnostics::{crack_dissipation, global_diagnostics, Diagnostics};
pub use force::{internal_force, internal_force_baqp, internal_force_pfpd, ForceContext, ForceWorkspace};
pub use integrator::{stable_time_step, velocity_verlet_step, DEFAULT_SAFETY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DamageModel {
    #[default]
    Pfpd,
    CriticalStretch,
}

/// Damage-model options of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub damage: DamageModel,
    pub driving_force: DrivingForce,
    pub split: EnergySplit,
    pub basis: Basis,
    /// Critical phase-field value of the kinematic degradation.
    pub s_c: f64,
    /// Critical stretch of the baseline; +∞ disables failure.
    pub eps_c: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            damage: DamageModel::Pfpd,
            driving_force: DrivingForce::Energy,
            split: EnergySplit::Spectral,
            basis: Basis::C1,
            s_c: 0.95,
            eps_c: f64::INFINITY,
        }
    }
}

/// Kinematic fields of all points.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: Vec<Vector3<f64>>,
    pub v: Vec<Vector3<f64>>,
    pub a: Vec<Vector3<f64>>,
    pub b_int: Vec<Vector3<f64>>,
    pub b_ext: Vec<Vector3<f64>>,
    pub damage: Vec<f64>,
    pub t: f64,
    pub step: usize,
}

impl SimState {
    pub fn new(n: usize) -> Self {
        Self {
            u: vec![Vector3::zeros(); n],
            v: vec![Vector3::zeros(); n],
            a: vec![Vector3::zeros(); n],
            b_int: vec![Vector3::zeros(); n],
            b_ext: vec![Vector3::zeros(); n],
            damage: vec![0.0; n],
            t: 0.0,
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (field, data) in [("u", &self.u), ("v", &self.v), ("a", &self.a)] {
            if let Some(i) = data.iter().position(|x| !(x.x.is_finite() && x.y.is_finite() && x.z.is_finite())) {
                return Err(Error::NonFinite { field, point: i, step: self.step });
            }
        }
        Ok(())
    }
}

/// A discretized body with its damage state, ready to be stepped.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub cloud: PointCloud,
    pub neigh: NeighborSystem,
    pub kernel: KernelSpec,
    pub mat: MaterialParams,
    pub model: ModelConfig,
    pub phi: Vec<f64>,
    pub bonds: BondState,
    pub cache: KinematicCache,
    pub bcs: Vec<BoundaryCondition>,
    pub state: SimState,
    pub dt: f64,
    pub workspace: ForceWorkspace,
}

impl Simulation {
    /// Assembles kernels and kinematic caches from an initial bond state and
    /// evaluates the initial acceleration.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cloud: PointCloud,
        neigh: NeighborSystem,
        kernel: KernelSpec,
        mat: MaterialParams,
        model: ModelConfig,
        bonds: BondState,
        bcs: Vec<BoundaryCondition>,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config("dt", format!("must be positive, got {dt}")));
        }
        if !(0.0..=1.0).contains(&model.s_c) {
            return Err(Error::config("s_c", format!("must lie in [0, 1], got {}", model.s_c)));
        }
        if !(model.eps_c > 0.0) {
            return Err(Error::config("epsilon_c", format!("must be positive, got {}", model.eps_c)));
        }
        bc::validate_bcs(&bcs, cloud.len())?;
        let omega = discrete_kernel_integrals(&cloud, &neigh, &kernel);
        if omega.n_isolated() > 0 {
            log::warn!("{} points have no neighbors", omega.n_isolated());
        }
        let phi = averaged_bond_kernels(&neigh, &kernel, &omega)?;
        let h: Vec<f64> = match model.damage {
            DamageModel::Pfpd => bonds.s.iter().map(|&s| kinematic_degradation(s, model.s_c)).collect(),
            DamageModel::CriticalStretch => bonds.active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect(),
        };
        let cache = KinematicCache::new(&neigh, &kernel, model.basis, h, &cloud.volumes);
        let n_singular = cache.singular.iter().filter(|s| **s).count();
        if n_singular > 0 {
            log::warn!("{n_singular} points have a singular moment matrix and are inactive");
        }
        let workspace = ForceWorkspace::new(&neigh);
        let state = SimState::new(cloud.len());
        let mut sim = Self {
            cloud,
            neigh,
            kernel,
            mat,
            model,
            phi,
            bonds,
            cache,
            bcs,
            state,
            dt,
            workspace,
        };
        sim.initialize()?;
        Ok(sim)
    }

    fn initialize(&mut self) -> Result<()> {
        let Self { cloud, neigh, phi, mat, model, bonds, cache, workspace, state, bcs, .. } = self;
        let ctx = ForceContext { cloud, neigh, phi, mat, model };
        bc::apply_neumann(&mut state.b_ext, bcs, 0.0);
        internal_force(&ctx, &state.u, bonds, cache, workspace, 0)?;
        state.b_int.copy_from_slice(&workspace.b_int);
        for ((a, bi), be) in state.a.iter_mut().zip(&state.b_int).zip(&state.b_ext) {
            *a = (bi + be) / mat.rho;
        }
        bc::zero_dirichlet_acceleration(&mut state.a, bcs);
        bc::apply_dirichlet(&mut state.v, bcs, 0.0);
        self.update_damage();
        Ok(())
    }

    pub fn context(&self) -> ForceContext<'_> {
        ForceContext {
            cloud: &self.cloud,
            neigh: &self.neigh,
            phi: &self.phi,
            mat: &self.mat,
            model: &self.model,
        }
    }

    /// One velocity-Verlet step.
    pub fn step(&mut self) -> Result<()> {
        let Self { cloud, neigh, phi, mat, model, bonds, cache, workspace, state, bcs, dt, .. } = self;
        let ctx = ForceContext { cloud, neigh, phi, mat, model };
        velocity_verlet_step(state, *dt, mat.rho, bcs, |u, step, b| {
            internal_force(&ctx, u, bonds, cache, workspace, step)?;
            b.copy_from_slice(&workspace.b_int);
            Ok(())
        })
    }

    /// Point damage of the current bond state.
    pub fn damage_field(&self) -> Vec<f64> {
        match self.model.damage {
            DamageModel::Pfpd => damage::point_damage_field(&self.neigh, &self.phi, &self.bonds.s, &self.cloud.volumes),
            DamageModel::CriticalStretch => {
                damage::baseline_point_damage_field(&self.neigh, &self.bonds.active, &self.cloud.volumes)
            }
        }
    }

    pub fn update_damage(&mut self) {
        self.state.damage = self.damage_field();
    }

    pub fn diagnostics(&self) -> Result<Diagnostics> {
        global_diagnostics(
            &self.state,
            &self.cloud,
            &self.neigh,
            &self.phi,
            &self.bonds,
            &self.mat,
            self.model.damage,
            &self.workspace.strain_energy,
        )
    }

    /// Total crack dissipation, optionally restricted to a point mask.
    pub fn crack_dissipation(&self, mask: Option<&[bool]>) -> f64 {
        crack_dissipation(&self.neigh, &self.cloud.volumes, &self.phi, &self.bonds, &self.mat, self.model.damage, mask)
    }

    /// |Σ b_int V| relative to Σ |b_int| V.
    pub fn momentum_residual(&self) -> (f64, f64) {
        let net = self
            .workspace
            .b_int
            .iter()
            .zip(&self.cloud.volumes)
            .fold(Vector3::zeros(), |acc, (b, v)| acc + b * *v)
            .norm();
        (net, self.workspace.force_scale)
    }
}

/// Exempts bonds touching any of the `sets` from failure.
pub fn apply_no_fail_zones(bonds: &mut BondState, neigh: &NeighborSystem, sets: &[PointSet]) -> usize {
    sets.iter().map(|s| bonds.mark_exempt(neigh, s)).sum()
}
