//! Versioned TOML files for vehicles, missions, controllers and sweeps.
//!
//! Every file carries `schema_version = 1` at the top level. Relative paths
//! inside a sweep manifest resolve against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::control::{ControlRates, Gains, INNER_OMEGA_N, INNER_ZETA};
use crate::planner::{MissionSpec, SolverOptions};
use crate::sim::{random_perturbations, Perturbation, SimConfig};
use crate::vehicle::VehicleParams;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn config_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_path_buf(), message: message.into() }
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

/// Reads and parses `path`, rejecting a missing or unknown `schema_version`.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| config_err(path, e.to_string()))?;
    parse(&text, path)
}

/// Parses TOML text; `origin` only labels errors.
pub fn parse<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<T> {
    let probe: VersionProbe = toml::from_str(text).map_err(|e| config_err(origin, e.message()))?;
    match probe.schema_version {
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(config_err(origin, format!("unsupported schema_version {v} (expected {SCHEMA_VERSION})"))),
        None => return Err(config_err(origin, "missing schema_version")),
    }
    toml::from_str(text).map_err(|e| config_err(origin, e.message()))
}

/// Writes `value` as TOML.
pub fn save<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(value).map_err(|e| config_err(path, e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleFile {
    pub schema_version: u32,
    pub vehicle: VehicleParams,
}

impl VehicleFile {
    pub fn new(vehicle: VehicleParams) -> Self {
        VehicleFile { schema_version: SCHEMA_VERSION, vehicle }
    }

    pub fn load(path: &Path) -> Result<VehicleParams> {
        let f: VehicleFile = load(path)?;
        f.vehicle.validate().map_err(|e| config_err(path, e.to_string()))?;
        Ok(f.vehicle)
    }
}

/// How a planned maneuver is flown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlightSettings {
    /// Steady flight appended after the planned maneuver, s.
    pub tail: f64,
    /// Reference sample spacing of the tail, s.
    pub spacing: f64,
}

impl Default for FlightSettings {
    fn default() -> Self {
        FlightSettings { tail: 1.0, spacing: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionFile {
    pub schema_version: u32,
    pub mission: MissionSpec,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub flight: FlightSettings,
}

impl MissionFile {
    pub fn load(path: &Path) -> Result<MissionFile> {
        let f: MissionFile = load(path)?;
        f.mission.validate().map_err(|e| config_err(path, e.to_string()))?;
        Ok(f)
    }
}

/// Gains given either as full diagonals or as a natural frequency and damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Natural {
        omega_n: f64,
        zeta: f64,
        #[serde(default = "default_inner_omega")]
        inner_omega_n: f64,
        #[serde(default = "default_inner_zeta")]
        inner_zeta: f64,
    },
    Explicit(Gains),
}

fn default_inner_omega() -> f64 {
    INNER_OMEGA_N
}

fn default_inner_zeta() -> f64 {
    INNER_ZETA
}

impl GainSpec {
    pub fn natural(omega_n: f64, zeta: f64) -> Self {
        GainSpec::Natural { omega_n, zeta, inner_omega_n: INNER_OMEGA_N, inner_zeta: INNER_ZETA }
    }

    pub fn resolve(&self) -> Result<Gains> {
        match *self {
            GainSpec::Natural { omega_n, zeta, inner_omega_n, inner_zeta } => {
                let outer = Gains::from_natural(omega_n, zeta)?;
                let ip = inner_omega_n * inner_omega_n;
                let id = 2.0 * inner_zeta * inner_omega_n;
                Gains::new(outer.kp, outer.kd, [ip; 3], [id; 3])
            }
            GainSpec::Explicit(g) => Gains::new(g.kp, g.kd, g.kappa_p, g.kappa_d),
        }
    }
}

/// Gains, loop rates and integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerFile {
    pub schema_version: u32,
    pub gains: GainSpec,
    #[serde(default)]
    pub rates: ControlRates,
    #[serde(default = "default_dt")]
    pub dt_plant: f64,
    #[serde(default = "default_divergence")]
    pub divergence_limit: f64,
}

fn default_dt() -> f64 {
    SimConfig::default().dt_plant
}

fn default_divergence() -> f64 {
    SimConfig::default().divergence_limit
}

impl ControllerFile {
    pub fn new(gains: GainSpec) -> Self {
        ControllerFile {
            schema_version: SCHEMA_VERSION,
            gains,
            rates: ControlRates::default(),
            dt_plant: default_dt(),
            divergence_limit: default_divergence(),
        }
    }

    pub fn load(path: &Path) -> Result<ControllerFile> {
        let f: ControllerFile = load(path)?;
        f.gains.resolve().map_err(|e| config_err(path, e.to_string()))?;
        f.sim_config().validate().map_err(|e| config_err(path, e.to_string()))?;
        Ok(f)
    }

    /// Simulation settings with this file's rates; other fields at defaults.
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            rates: self.rates,
            dt_plant: self.dt_plant,
            divergence_limit: self.divergence_limit,
            ..SimConfig::default()
        }
    }
}

/// Random start-state offsets plus any listed explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSpec {
    pub count: usize,
    /// m
    pub position_scale: f64,
    /// m/s
    pub velocity_scale: f64,
    /// Keep offsets in the plane of the maneuver.
    pub planar: bool,
    pub explicit: Vec<Perturbation>,
    /// Include the unperturbed start.
    pub nominal: bool,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec {
            count: 4,
            position_scale: 1.0,
            velocity_scale: 0.5,
            planar: true,
            explicit: Vec::new(),
            nominal: false,
        }
    }
}

impl PerturbationSpec {
    pub fn generate(&self, seed: u64) -> Vec<Perturbation> {
        let mut out = Vec::new();
        if self.nominal {
            out.push(Perturbation::default());
        }
        out.extend(self.explicit.iter().copied());
        out.extend(random_perturbations(self.count, seed, self.position_scale, self.velocity_scale, self.planar));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepManifest {
    pub schema_version: u32,
    pub vehicle: PathBuf,
    pub missions: Vec<PathBuf>,
    /// Supplies rates and integration settings; its gains are ignored.
    pub controller: PathBuf,
    pub gains: Vec<GainSpec>,
    #[serde(default)]
    pub perturbations: PerturbationSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: crate::sim::FeedforwardMode,
}

fn default_mode() -> crate::sim::FeedforwardMode {
    crate::sim::FeedforwardMode::Optimal
}

impl SweepManifest {
    /// Loads the manifest and makes its paths absolute.
    pub fn load(path: &Path) -> Result<SweepManifest> {
        let mut m: SweepManifest = load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &PathBuf| if p.is_relative() { base.join(p) } else { p.clone() };
        m.vehicle = fix(&m.vehicle);
        m.controller = fix(&m.controller);
        m.missions = m.missions.iter().map(fix).collect();
        if m.missions.is_empty() || m.gains.is_empty() {
            return Err(config_err(path, "sweep needs at least one mission and one gain set"));
        }
        for g in &m.gains {
            g.resolve().map_err(|e| config_err(path, e.to_string()))?;
        }
        Ok(m)
    }
}
