//! The four benchmark setups, their run driver and output.
//!
//! Scenario geometry lives in the first octant: the plate spans
//! `[0, Lx] × [0, Ly] × [0, Lz]` with the grid counts `floor(L/Δx)`.

pub mod config;
pub mod output;
pub mod tracking;

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Vector3;
use serde::Serialize;

use crate::damage::BondState;
use crate::discretization::{
    apply_precrack, build_neighborhoods, generate_grid, tag_point_set, NotchPlane, PointCloud, PointSet, Region, Side,
};
use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};
use crate::kinematics::Basis;
use crate::material::{derive_params, MaterialParams};
use crate::normalization::normalization_constant;
use crate::solver::{
    apply_no_fail_zones, stable_time_step, BcValue, BoundaryCondition, DamageModel, Diagnostics, ModelConfig, Simulation,
};

pub use config::{resolve_config, Preset, ScenarioConfig, ScenarioName, SnapshotFormat};
pub use output::{read_snapshot_csv, write_snapshot_csv, write_snapshot_vtk, write_timeseries};
pub use tracking::{count_branch_lobes, crack_angle, track_crack_tip, CrackTipTrace, TipMeasure, TrackingSpec};

/// Bond-based estimate √(5 G_c / (9 κ δ)) with the bulk modulus κ.
pub fn default_critical_stretch(youngs: f64, poisson: f64, gc: f64, horizon: f64) -> f64 {
    let kappa = youngs / (3.0 * (1.0 - 2.0 * poisson));
    (5.0 * gc / (9.0 * kappa * horizon)).sqrt()
}

/// A fully assembled benchmark.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub sim: Simulation,
    /// Tip trackers; the first one feeds the time series.
    pub tracking: Vec<TrackingSpec>,
    pub notch_tips: Vec<Vector3<f64>>,
    pub no_fail: Vec<PointSet>,
    pub n_precracked: usize,
    pub setup_hash: String,
}

impl Scenario {
    pub fn mat(&self) -> &MaterialParams {
        &self.sim.mat
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.sim.cloud
    }
}

fn positive(key: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {x}")))
    }
}

fn validate(cfg: &ScenarioConfig) -> Result<()> {
    positive("t_end", cfg.t_end)?;
    positive("safety", cfg.safety)?;
    if let Some(dt) = cfg.dt {
        positive("dt", dt)?;
    }
    positive("grid.horizon_ratio", cfg.grid.horizon_ratio)?;
    if let Some(s) = cfg.grid.spacing {
        positive("grid.spacing", s)?;
    } else if cfg.grid.n == 0 {
        return Err(Error::config("grid.n", "must be at least 1"));
    }
    let g = &cfg.geometry;
    positive("geometry.lx", g.lx)?;
    positive("geometry.ly", g.ly)?;
    positive("geometry.lz", g.lz)?;
    if !(g.notch_length >= 0.0 && g.notch_length < g.lx) {
        return Err(Error::config("geometry.notch_length", format!("must lie in [0, lx), got {}", g.notch_length)));
    }
    if cfg.scenario == ScenarioName::KalthoffWinkler && !(g.notch_half_gap > 0.0 && g.notch_half_gap < g.ly / 2.0) {
        return Err(Error::config("geometry.notch_half_gap", format!("must lie in (0, ly/2), got {}", g.notch_half_gap)));
    }
    if !(cfg.tracking.threshold > 0.0 && cfg.tracking.threshold <= 1.0) {
        return Err(Error::config("tracking.threshold", "must lie in (0, 1]"));
    }
    if cfg.output.every == 0 {
        return Err(Error::config("output.every", "must be at least 1"));
    }
    if cfg.loading.layers == 0 {
        return Err(Error::config("loading.layers", "must be at least 1"));
    }
    if !(cfg.loading.ramp_time >= 0.0) {
        return Err(Error::config("loading.ramp_time", "must be non-negative"));
    }
    Ok(())
}

/// Moves a coordinate onto the nearest plane between two grid layers so no
/// point sits on a notch.
fn snap_to_interface(value: f64, dx: f64, n: usize) -> f64 {
    let k = (value / dx).round().clamp(1.0, (n.max(2) - 1) as f64);
    k * dx
}

fn load(value: [f64; 3], ramp: f64) -> BcValue {
    if ramp > 0.0 {
        BcValue::Ramp { value, ramp_time: ramp }
    } else {
        BcValue::Constant { value }
    }
}

fn layers(cloud: &PointCloud, name: &str, axis: usize, side: Side, count: usize) -> PointSet {
    tag_point_set(cloud, name, &Region::Layers { axis, side, count })
}

const FAR: f64 = 1e3;

fn notch_y(y: f64, x_end: f64) -> NotchPlane {
    NotchPlane { point: [0.0, y, 0.0], normal: [0.0, 1.0, 0.0], min: [-FAR, y - 1.0, -FAR], max: [x_end, y + 1.0, FAR] }
}

/// Builds the discretized scenario, validating every set and the time step.
pub fn build_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    validate(cfg)?;
    let kind = KernelKind::parse(&cfg.model.kernel).ok_or_else(|| {
        Error::config("model.kernel", format!("unknown kernel `{}` (expected constant, linear, cubic)", cfg.model.kernel))
    })?;
    let basis = Basis::parse(&cfg.model.basis)
        .ok_or_else(|| Error::config("model.basis", format!("unknown basis `{}` (expected C1, RK1)", cfg.model.basis)))?;
    let g = &cfg.geometry;
    let reference = match cfg.scenario {
        ScenarioName::Btt => g.ly,
        _ => g.lx,
    };
    let dx = cfg.grid.spacing.unwrap_or(reference / cfg.grid.n as f64);
    let counts = [g.lx, g.ly, g.lz].map(|l| ((l / dx) + 1e-6).floor().max(1.0) as usize);
    let size = counts.map(|c| c as f64 * dx);
    let cloud = generate_grid(size, dx)?.translated(Vector3::from(size) * 0.5);
    let neigh = build_neighborhoods(&cloud, cfg.grid.horizon_ratio, cfg.grid.eps_delta)?;
    let kernel = KernelSpec::new(kind, neigh.horizon)?;
    let c0 = normalization_constant(&kernel);
    let m = &cfg.material;
    let eps_c = match cfg.model.damage {
        DamageModel::CriticalStretch => {
            Some(cfg.model.epsilon_c.unwrap_or_else(|| default_critical_stretch(m.youngs, m.nu, m.gc, neigh.horizon)))
        }
        DamageModel::Pfpd => cfg.model.epsilon_c,
    };
    let mat = derive_params(m.rho, m.youngs, m.nu, m.gc, neigh.horizon, c0, eps_c)?;
    let model = ModelConfig {
        damage: cfg.model.damage,
        driving_force: cfg.model.driving_force,
        split: Default::default(),
        basis,
        s_c: cfg.model.s_c,
        eps_c: eps_c.unwrap_or(f64::INFINITY),
    };

    let ld = &cfg.loading;
    let y_mid = snap_to_interface(size[1] / 2.0, dx, counts[1]);
    let mut notches = Vec::new();
    let mut bcs = Vec::new();
    let mut no_fail = Vec::new();
    let mut tracking = Vec::new();
    let mut notch_tips = Vec::new();
    let whole = |lo: Vector3<f64>| (lo, Vector3::new(FAR, FAR, FAR));
    match cfg.scenario {
        ScenarioName::ModeI | ScenarioName::ModeIi | ScenarioName::Btt => {
            notches.push(notch_y(y_mid, g.notch_length));
            let tip = Vector3::new(g.notch_length, y_mid, size[2] / 2.0);
            notch_tips.push(tip);
            let top = layers(&cloud, "top", 1, Side::High, ld.layers);
            let bottom = layers(&cloud, "bottom", 1, Side::Low, ld.layers);
            match cfg.scenario {
                ScenarioName::Btt => {
                    let b = ld.stress / dx;
                    bcs.push(BoundaryCondition::neumann(top, load([0.0, b, 0.0], ld.ramp_time)));
                    bcs.push(BoundaryCondition::neumann(bottom, load([0.0, -b, 0.0], ld.ramp_time)));
                }
                name => {
                    let dir = if name == ScenarioName::ModeI { Vector3::y() } else { Vector3::x() };
                    let v = dir * ld.velocity;
                    bcs.push(BoundaryCondition::dirichlet(top, load(v.into(), ld.ramp_time)));
                    bcs.push(BoundaryCondition::dirichlet(bottom, load((-v).into(), ld.ramp_time)));
                }
            }
            if ld.no_fail_layers > 0 {
                no_fail.push(layers(&cloud, "no_fail_top", 1, Side::High, ld.no_fail_layers));
                no_fail.push(layers(&cloud, "no_fail_bottom", 1, Side::Low, ld.no_fail_layers));
            }
            let (lo, hi) = whole(Vector3::new(g.notch_length, -FAR, -FAR));
            tracking.push(TrackingSpec {
                origin: tip,
                measure: TipMeasure::Advance(Vector3::x()),
                region_min: lo,
                region_max: hi,
                threshold: cfg.tracking.threshold,
            });
        }
        ScenarioName::KalthoffWinkler => {
            let y_lo = snap_to_interface(size[1] / 2.0 - g.notch_half_gap, dx, counts[1]);
            let y_hi = snap_to_interface(size[1] / 2.0 + g.notch_half_gap, dx, counts[1]);
            notches.push(notch_y(y_hi, g.notch_length));
            notches.push(notch_y(y_lo, g.notch_length));
            let impact = tag_point_set(
                &cloud,
                "impact",
                &Region::Intersect {
                    regions: vec![
                        Region::Layers { axis: 0, side: Side::Low, count: ld.layers },
                        Region::Box { min: [-FAR, y_lo, -FAR], max: [FAR, y_hi, FAR] },
                    ],
                },
            );
            bcs.push(BoundaryCondition::dirichlet(impact, load([ld.velocity, 0.0, 0.0], ld.ramp_time)));
            if ld.no_fail_layers > 0 {
                no_fail.push(layers(&cloud, "no_fail_back", 0, Side::High, ld.no_fail_layers));
            }
            let z = size[2] / 2.0;
            for (y, upper) in [(y_hi, true), (y_lo, false)] {
                let tip = Vector3::new(g.notch_length, y, z);
                notch_tips.push(tip);
                let (ylo, yhi) = if upper { (y_mid, FAR) } else { (-FAR, y_mid) };
                tracking.push(TrackingSpec {
                    origin: tip,
                    measure: TipMeasure::Distance,
                    region_min: Vector3::new(g.notch_length, ylo, -FAR),
                    region_max: Vector3::new(FAR, yhi, FAR),
                    threshold: cfg.tracking.threshold,
                });
            }
        }
    }

    let mut bonds = BondState::new(neigh.n_bonds());
    let mut n_precracked = 0;
    for n in &notches {
        let cut = apply_precrack(&cloud, &neigh, &mut bonds, n);
        if cut == 0 {
            return Err(Error::config("geometry.notch_length", "the notch does not cut any bond"));
        }
        n_precracked += cut;
    }
    for set in &no_fail {
        if set.is_empty() {
            return Err(Error::config("loading.no_fail_layers", format!("point set `{}` is empty", set.name)));
        }
    }
    apply_no_fail_zones(&mut bonds, &neigh, &no_fail);

    let stable = stable_time_step(&cloud, &mat, 1.0)?;
    let dt = match cfg.dt {
        Some(dt) if dt > stable => {
            return Err(Error::config("dt", format!("{dt:e} exceeds the stability limit {stable:e}")));
        }
        Some(dt) => dt,
        None => stable_time_step(&cloud, &mat, cfg.safety)?,
    };
    if cfg.safety > 1.0 && cfg.dt.is_none() {
        return Err(Error::config("safety", format!("must not exceed 1, got {}", cfg.safety)));
    }

    let sim = Simulation::new(cloud, neigh, kernel, mat, model, bonds, bcs, dt)?;
    Ok(Scenario {
        setup_hash: cfg.setup_hash(),
        config: cfg.clone(),
        sim,
        tracking,
        notch_tips,
        no_fail,
        n_precracked,
    })
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; `None` keeps everything in memory.
    pub out_dir: Option<PathBuf>,
    /// Overrides the configured end time.
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub setup_hash: String,
    pub points: usize,
    pub bonds: usize,
    pub steps: usize,
    pub dt: f64,
    pub t_end: f64,
    pub runtime_s: f64,
    pub max_damage: f64,
    pub c0: f64,
    pub rayleigh_wave_speed: f64,
    pub max_tip_speed: f64,
    pub crack_energy: f64,
    pub failed: Option<String>,
}

impl RunSummary {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub diagnostics: Vec<Diagnostics>,
    pub trace: CrackTipTrace,
    /// One trace per tracker.
    pub traces: Vec<CrackTipTrace>,
    pub summary: RunSummary,
}

struct Recorder {
    dir: Option<PathBuf>,
    format: SnapshotFormat,
    diagnostics: Vec<Diagnostics>,
    traces: Vec<CrackTipTrace>,
}

impl Recorder {
    fn sample(&mut self, sc: &mut Scenario) -> Result<()> {
        sc.sim.update_damage();
        let d = sc.sim.diagnostics()?;
        for (spec, trace) in sc.tracking.iter().zip(&mut self.traces) {
            trace.push(d.t, track_crack_tip(&sc.sim.state.damage, &sc.sim.cloud, spec))?;
        }
        self.diagnostics.push(d);
        if let Some(dir) = &self.dir {
            write_timeseries(&dir.join("timeseries.csv"), &self.diagnostics, &self.traces[0], sc.sim.mat.rayleigh_wave_speed)?;
        }
        Ok(())
    }

    fn snapshot(&self, sc: &Scenario) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let stem = dir.join(format!("snapshot_{:06}", sc.sim.state.step));
        let (cloud, state) = (&sc.sim.cloud, &sc.sim.state);
        if matches!(self.format, SnapshotFormat::Vtk | SnapshotFormat::Both) {
            write_snapshot_vtk(&stem.with_extension("vtk"), cloud, state)?;
        }
        if matches!(self.format, SnapshotFormat::Csv | SnapshotFormat::Both) {
            write_snapshot_csv(&stem.with_extension("csv"), cloud, state)?;
        }
        Ok(())
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Builds and runs a scenario to its end time. On a solver failure the
/// outputs gathered so far and the summary are written before the error
/// is returned.
pub fn run_simulation(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let started = Instant::now();
    let mut cfg = cfg.clone();
    if let Some(t) = opts.t_end {
        cfg.t_end = t;
    }
    let mut sc = build_scenario(&cfg)?;
    if let Some(dir) = &opts.out_dir {
        create_dir(dir)?;
        std::fs::write(dir.join("config.toml"), cfg.to_toml()).map_err(|e| Error::io(dir.join("config.toml"), e))?;
    }
    let dt = sc.sim.dt;
    let n_steps = (cfg.t_end / dt - 1e-9).ceil().max(1.0) as usize;
    log::info!(
        "{}: {} points, {} bonds, dt = {dt:.3e} s, {n_steps} steps, c0 = {:.6}",
        cfg.scenario,
        sc.sim.cloud.len(),
        sc.sim.neigh.n_bonds(),
        sc.sim.mat.c0
    );
    let mut rec = Recorder {
        dir: opts.out_dir.clone(),
        format: cfg.output.format,
        diagnostics: Vec::new(),
        traces: vec![CrackTipTrace::default(); sc.tracking.len()],
    };
    rec.sample(&mut sc)?;
    let mut failure = None;
    for k in 1..=n_steps {
        if let Err(e) = sc.sim.step() {
            log::error!("step {k} failed: {e}");
            failure = Some(e);
            break;
        }
        if k % cfg.output.every == 0 || k == n_steps {
            rec.sample(&mut sc)?;
            let d = rec.diagnostics.last().unwrap();
            log::info!(
                "step {k}/{n_steps} t = {:.3e} E_kin = {:.4e} E_strain = {:.4e} E_crack = {:.4e} max D = {:.3}",
                d.t,
                d.kinetic,
                d.strain,
                d.crack,
                d.max_damage
            );
        }
        if cfg.output.snapshot_every > 0 && k % cfg.output.snapshot_every == 0 && k != n_steps {
            rec.snapshot(&sc)?;
        }
    }
    sc.sim.update_damage();
    rec.snapshot(&sc)?;
    let summary = RunSummary {
        scenario: cfg.scenario.to_string(),
        setup_hash: sc.setup_hash.clone(),
        points: sc.sim.cloud.len(),
        bonds: sc.sim.neigh.n_bonds(),
        steps: sc.sim.state.step,
        dt,
        t_end: sc.sim.state.t,
        runtime_s: started.elapsed().as_secs_f64(),
        max_damage: sc.sim.state.damage.iter().copied().fold(0.0, f64::max),
        c0: sc.sim.mat.c0,
        rayleigh_wave_speed: sc.sim.mat.rayleigh_wave_speed,
        max_tip_speed: rec.traces.first().map_or(0.0, |t| t.max_smoothed_speed()),
        crack_energy: sc.sim.crack_dissipation(None),
        failed: failure.as_ref().map(|e| e.to_string()),
    };
    if let Some(dir) = &opts.out_dir {
        let p = dir.join("summary.toml");
        std::fs::write(&p, summary.to_toml()).map_err(|e| Error::io(&p, e))?;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let Recorder { diagnostics, traces, .. } = rec;
    Ok(RunOutcome { scenario: sc, diagnostics, trace: traces[0].clone(), traces, summary })
}
