//! Scenario configuration: built-in presets, TOML files and `key=value`
//! overrides, merged in that order.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::damage::DrivingForce;
use crate::error::{Error, Result};
use crate::solver::DamageModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    ModeI,
    ModeIi,
    Btt,
    KalthoffWinkler,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 4] = [Self::ModeI, Self::ModeIi, Self::Btt, Self::KalthoffWinkler];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "mode_i" => Ok(Self::ModeI),
            "mode_ii" => Ok(Self::ModeIi),
            "btt" => Ok(Self::Btt),
            "kalthoff_winkler" | "kw" => Ok(Self::KalthoffWinkler),
            _ => Err(Error::config(
                "scenario",
                format!("unknown scenario `{name}` (expected mode_i, mode_ii, btt, kalthoff_winkler)"),
            )),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ModeI => "mode_i",
            Self::ModeIi => "mode_ii",
            Self::Btt => "btt",
            Self::KalthoffWinkler => "kalthoff_winkler",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Desk,
    Paper,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::Desk),
            "paper" => Ok(Self::Paper),
            _ => Err(Error::config("preset", format!("unknown preset `{name}` (expected desk or paper)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    #[default]
    Vtk,
    Csv,
    Both,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Points along the reference edge (x for the plates, y for the BTT).
    pub n: usize,
    /// Explicit spacing; takes precedence over `n` when set.
    pub spacing: Option<f64>,
    pub horizon_ratio: f64,
    pub eps_delta: f64,
}

/// Plate dimensions and notch placement, all in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    pub notch_length: f64,
    /// Half the distance between the two Kalthoff-Winkler notches.
    pub notch_half_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub rho: f64,
    #[serde(rename = "E")]
    pub youngs: f64,
    pub nu: f64,
    #[serde(rename = "Gc")]
    pub gc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kernel: String,
    pub basis: String,
    pub damage: DamageModel,
    pub driving_force: DrivingForce,
    pub s_c: f64,
    /// Baseline critical stretch; defaults to the bond-based energy estimate.
    pub epsilon_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingConfig {
    /// Boundary speed of the Dirichlet scenarios.
    pub velocity: f64,
    /// Traction of the BTT.
    pub stress: f64,
    /// Linear ramp time; 0 applies the load instantly.
    pub ramp_time: f64,
    pub layers: usize,
    pub no_fail_layers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingConfig {
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub format: SnapshotFormat,
    /// Steps between time-series rows.
    pub every: usize,
    /// Steps between snapshots; 0 writes only the final one.
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioName,
    pub preset: Preset,
    pub seed: u64,
    pub t_end: f64,
    pub safety: f64,
    pub dt: Option<f64>,
    pub grid: GridConfig,
    pub geometry: GeometryConfig,
    pub material: MaterialConfig,
    pub model: ModelSection,
    pub loading: LoadingConfig,
    pub tracking: TrackingConfig,
    pub output: OutputConfig,
}

fn model_defaults() -> ModelSection {
    ModelSection {
        kernel: "cubic".into(),
        basis: "C1".into(),
        damage: DamageModel::Pfpd,
        driving_force: DrivingForce::Energy,
        s_c: 0.95,
        epsilon_c: None,
    }
}

impl ScenarioConfig {
    /// Built-in setup of a scenario at the given preset.
    pub fn defaults(name: ScenarioName, preset: Preset) -> Self {
        let paper = preset == Preset::Paper;
        let mut cfg = match name {
            ScenarioName::ModeI | ScenarioName::ModeIi => Self {
                scenario: name,
                preset,
                seed: 0,
                t_end: 171e-6,
                safety: 0.5,
                dt: None,
                grid: GridConfig { n: if paper { 120 } else { 60 }, spacing: None, horizon_ratio: 3.0, eps_delta: 0.015 },
                geometry: GeometryConfig { lx: 0.1, ly: 0.1, lz: 0.01, notch_length: 0.05, notch_half_gap: 0.0 },
                material: MaterialConfig { rho: 2500.0, youngs: 32e9, nu: 0.25, gc: 100.0 },
                model: model_defaults(),
                loading: LoadingConfig {
                    velocity: if name == ScenarioName::ModeI { 0.2 } else { 0.1 },
                    stress: 0.0,
                    ramp_time: 0.0,
                    layers: 1,
                    no_fail_layers: 1,
                },
                tracking: TrackingConfig { threshold: 0.5 },
                output: OutputConfig { format: SnapshotFormat::Vtk, every: 10, snapshot_every: 200 },
            },
            ScenarioName::Btt => Self {
                scenario: name,
                preset,
                seed: 0,
                t_end: 55e-6,
                safety: 0.5,
                dt: None,
                grid: GridConfig { n: if paper { 100 } else { 50 }, spacing: None, horizon_ratio: 3.0, eps_delta: 0.015 },
                geometry: GeometryConfig { lx: 0.1, ly: 0.04, lz: 0.004, notch_length: 0.05, notch_half_gap: 0.0 },
                material: MaterialConfig { rho: 2450.0, youngs: 32e9, nu: 0.25, gc: 3.0 },
                model: model_defaults(),
                loading: LoadingConfig { velocity: 0.0, stress: 1e6, ramp_time: 0.0, layers: 1, no_fail_layers: 0 },
                tracking: TrackingConfig { threshold: 0.5 },
                output: OutputConfig { format: SnapshotFormat::Vtk, every: 5, snapshot_every: 100 },
            },
            ScenarioName::KalthoffWinkler => Self {
                scenario: name,
                preset,
                seed: 0,
                t_end: 0.2e-3,
                safety: 0.5,
                dt: None,
                grid: GridConfig {
                    n: if paper { 111 } else { 55 },
                    spacing: Some(if paper { 0.9e-3 } else { 1.8e-3 }),
                    horizon_ratio: 3.0,
                    eps_delta: 0.015,
                },
                geometry: GeometryConfig { lx: 0.1, ly: 0.2, lz: 0.009, notch_length: 0.05, notch_half_gap: 0.025 },
                material: MaterialConfig { rho: 8000.0, youngs: 190e9, nu: 0.3, gc: 34e3 },
                model: model_defaults(),
                loading: LoadingConfig { velocity: 16.5, stress: 0.0, ramp_time: 10e-6, layers: 5, no_fail_layers: 3 },
                tracking: TrackingConfig { threshold: 0.5 },
                output: OutputConfig { format: SnapshotFormat::Vtk, every: 10, snapshot_every: 250 },
            },
        };
        cfg.scenario = name;
        cfg
    }

    /// Canonical TOML text of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn setup_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_override(text: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| Error::config("override", format!("expected key=value, got `{text}`")))?;
    let key = key.trim();
    let path: Vec<String> = key.split('.').map(str::to_string).collect();
    if key.is_empty() || path.iter().any(String::is_empty) {
        return Err(Error::config("override", format!("malformed key in `{text}`")));
    }
    let raw = raw.trim();
    // bare words are taken as strings so `model.kernel=linear` works unquoted
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((path, value))
}

fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(Error::config(path.join("."), format!("`{p}` is not a section"))),
        };
    }
    // integers given for float fields are widened by the existing default
    let value = match (cur.get(last), value) {
        (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (_, v) => v,
    };
    cur.insert(last.clone(), value);
    Ok(())
}

fn first_key(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "config".to_string())
}

fn decode(table: toml::Table, source: &str) -> Result<ScenarioConfig> {
    ScenarioConfig::deserialize(toml::Value::Table(table))
        .map_err(|e| {
            let msg = e.to_string();
            Error::config(first_key(&msg), format!("{source}: {}", msg.trim()))
        })
}

/// Resolves defaults → file → overrides into a validated configuration.
/// The scenario name comes from `name` or else the file's `scenario` key;
/// likewise for the preset, which defaults to desk.
pub fn resolve_config(
    name: Option<&str>,
    preset: Option<&str>,
    file: Option<&Path>,
    overrides: &[String],
) -> Result<ScenarioConfig> {
    let file_table = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Some(text.parse::<toml::Table>().map_err(|e| Error::config("config", format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let from_file = |key: &str| file_table.as_ref().and_then(|t| t.get(key)).and_then(|v| v.as_str().map(str::to_string));
    let name = match name.map(str::to_string).or_else(|| from_file("scenario")) {
        Some(n) => ScenarioName::parse(&n)?,
        None => return Err(Error::config("scenario", "no scenario given".to_string())),
    };
    let preset = match preset.map(str::to_string).or_else(|| from_file("preset")) {
        Some(p) => Preset::parse(&p)?,
        None => Preset::Desk,
    };
    let defaults = ScenarioConfig::defaults(name, preset);
    let mut table: toml::Table = toml::from_str(&defaults.to_toml()).expect("defaults round-trip");
    if let Some(mut t) = file_table {
        // the command line choice wins over the file
        t.insert("scenario".into(), toml::Value::String(name.as_str().into()));
        t.insert("preset".into(), toml::Value::String(if preset == Preset::Paper { "paper" } else { "desk" }.into()));
        merge(&mut table, t);
        decode(table.clone(), "config file")?;
    }
    for o in overrides {
        let (path, value) = parse_override(o)?;
        apply_override(&mut table, &path, value)?;
        let key = path.join(".");
        decode(table.clone(), &format!("override `{o}`")).map_err(|e| match e {
            Error::Config { message, .. } => Error::Config { key: key.clone(), message },
            other => other,
        })?;
    }
    decode(table, "configuration")
}
