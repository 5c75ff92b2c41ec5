//! Scenario and model files (TOML, versioned by `schema_version`).
//!
//! SMA and limb indices in files are 1-based, matching the trace CSV columns.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sma_safety::pose::PiawGains;
use sma_safety::sim::{
    BasePose, DisturbanceProfile, DisturbanceWindow, LimbGeometry, Plant, PlantState, PoseModelParams, Scenario,
    SetpointSchedule, LIMBS, SMAS,
};
use sma_safety::thermal::{lump, BlockLinearSystem, PhysicalThermalParams, ThermalBlock};
use sma_safety::{PoseState, SafetyConfig};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.to_string(),
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSection {
    pub h_c: f64,
    pub area: f64,
    pub c_v: f64,
    pub rho: f64,
    pub current: f64,
    pub t_0: f64,
    /// Falls back to the file's top-level `dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

/// Exactly one of `uniform`, `lumped` or `physical`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// SMA count for `uniform` and `physical` models; defaults to 10.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<Coefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lumped: Option<Vec<Coefficients>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalSection>,
}

impl ModelSection {
    /// Builds the block system. Lumped coefficients are taken as given (only
    /// finiteness is checked) so that models failing the invariance
    /// certificate can still be loaded and diagnosed.
    pub fn build(&self, default_dt: Option<f64>) -> Result<BlockLinearSystem<f64>> {
        let count = self.count.unwrap_or(SMAS);
        let coeffs: Vec<Coefficients> = match (&self.uniform, &self.lumped, &self.physical) {
            (Some(c), None, None) => vec![*c; count],
            (None, Some(list), None) => {
                if self.count.is_some_and(|n| n != list.len()) {
                    return Err(invalid(
                        "model.count",
                        format!("count = {count} but {} lumped entries given", list.len()),
                    ));
                }
                list.clone()
            }
            (None, None, Some(ph)) => {
                let dt = ph
                    .dt
                    .or(default_dt)
                    .ok_or_else(|| invalid("model.physical.dt", "dt is required for a physical model"))?;
                let phys = PhysicalThermalParams {
                    h_c: ph.h_c,
                    area: ph.area,
                    c_v: ph.c_v,
                    rho: ph.rho,
                    current: ph.current,
                    t_0: ph.t_0,
                    dt,
                };
                let p = lump(&phys).map_err(|e| invalid("model.physical", e))?;
                vec![
                    Coefficients {
                        a1: p.a1,
                        a2: p.a2,
                        a3: p.a3
                    };
                    count
                ]
            }
            _ => {
                return Err(invalid(
                    "model",
                    "specify exactly one of `uniform`, `lumped` or `physical`",
                ))
            }
        };
        let blocks = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                ThermalBlock::from_coefficients(c.a1, c.a2, c.a3)
                    .map_err(|e| invalid(&format!("model SMA {}", i + 1), e))
            })
            .collect::<Result<Vec<_>>>()?;
        BlockLinearSystem::from_blocks(blocks).map_err(|e| invalid("model", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmaxOverride {
    /// 1-based SMA index.
    pub sma: usize,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetySection {
    pub t_max: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<TmaxOverride>,
}

impl SafetySection {
    pub fn build(&self) -> Result<SafetyConfig> {
        let mut cfg = SafetyConfig::new(self.t_max, self.gamma).map_err(|e| invalid("safety", e))?;
        for o in &self.overrides {
            if o.sma == 0 {
                return Err(invalid("safety.overrides", "SMA indices are 1-based"));
            }
            cfg = cfg
                .with_override(o.sma - 1, o.t_max)
                .map_err(|e| invalid("safety.overrides", e))?;
        }
        Ok(cfg)
    }
}

/// Stand-alone model file consumed by `check-invariance`. Scenario files are
/// accepted too; their extra sections are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub model: ModelSection,
    pub safety: SafetySection,
}

impl ModelFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let f: Self = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        check_schema(f.schema_version)?;
        Ok(f)
    }

    pub fn build(&self) -> Result<(BlockLinearSystem<f64>, SafetyConfig)> {
        Ok((self.model.build(self.dt)?, self.safety.build()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimbGains {
    pub k_p: f64,
    pub k_i: f64,
    #[serde(default)]
    pub k_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub k_p: f64,
    pub k_i: f64,
    #[serde(default)]
    pub k_a: f64,
    /// Per-limb gains replacing the uniform ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_limb: Option<Vec<LimbGains>>,
}

impl Default for GainsSection {
    fn default() -> Self {
        let g = PiawGains::<f64>::default();
        Self {
            k_p: g.k_p,
            k_i: g.k_i,
            k_a: g.k_a,
            per_limb: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseModelSection {
    pub c_gain: f64,
    pub c_damp: f64,
    #[serde(default = "default_theta_lim")]
    pub theta_lim: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<Vec<f64>>,
}

fn default_theta_lim() -> f64 {
    std::f64::consts::FRAC_PI_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    /// Arc length per chain segment, m.
    pub seg_len: Vec<f64>,
    /// 1-based limb indices from the chain root to the front foot; defaults
    /// to `[5, 4, 3, 2, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BasePose<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetpointEntry {
    pub t: f64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceEntry {
    pub t_start: f64,
    pub t_end: f64,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Defaults to all zeros.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    /// Defaults to each SMA's ambient equilibrium.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temp: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    /// Shared controller and plant step, s.
    pub dt: f64,
    /// Number of steps.
    pub horizon: usize,
    pub model: ModelSection,
    pub safety: SafetySection,
    #[serde(default)]
    pub gains: GainsSection,
    pub pose_model: PoseModelSection,
    pub geometry: GeometrySection,
    pub setpoints: Vec<SetpointEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disturbances: Vec<DisturbanceEntry>,
    #[serde(default)]
    pub initial: InitialSection,
}

fn check_schema(version: u32) -> Result<()> {
    if version == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(invalid(
            "schema_version",
            format!("unsupported schema version {version}, expected {SCHEMA_VERSION}"),
        ))
    }
}

fn check_count(field: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(invalid(field, format!("expected {expected} entries, got {got}")))
    }
}

fn one_based(field: &str, idx: usize, len: usize) -> Result<usize> {
    if (1..=len).contains(&idx) {
        Ok(idx - 1)
    } else {
        Err(invalid(field, format!("index {idx} outside 1..={len}")))
    }
}

impl ScenarioFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let f: Self = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        check_schema(f.schema_version)?;
        Ok(f)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    /// Builds and validates the scenario. The invariance certificate is not
    /// checked here; [`sma_safety::sim::run_scenario`] refuses to run without it.
    pub fn build(&self) -> Result<Scenario<f64>> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("dt must be > 0, got {}", self.dt)));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "horizon must be >= 1 step"));
        }

        let sys = self.model.build(Some(self.dt))?;
        check_count("model", SMAS, sys.m())?;
        let safety = self.safety.build()?;
        safety.validate_for(&sys).map_err(|e| invalid("safety", e))?;

        let load = self.pose_model.load.clone().unwrap_or_else(|| vec![0.0; LIMBS]);
        check_count("pose_model.load", LIMBS, load.len())?;
        let pose = PoseModelParams {
            c_gain: self.pose_model.c_gain,
            c_damp: self.pose_model.c_damp,
            load,
            theta_lim: self.pose_model.theta_lim,
        };
        let plant = Plant::new(sys, pose, self.dt).map_err(|e| invalid("pose_model", e))?;

        let gains = match &self.gains.per_limb {
            None => vec![(self.gains.k_p, self.gains.k_i, self.gains.k_a); LIMBS],
            Some(list) => {
                check_count("gains.per_limb", LIMBS, list.len())?;
                list.iter().map(|g| (g.k_p, g.k_i, g.k_a)).collect()
            }
        }
        .into_iter()
        .map(|(k_p, k_i, k_a)| PiawGains::new(k_p, k_i, k_a, self.dt))
        .collect::<sma_safety::Result<Vec<_>>>()
        .map_err(|e| invalid("gains", e))?;

        let chain = match &self.geometry.chain {
            None => (0..LIMBS).rev().collect(),
            Some(c) => c
                .iter()
                .map(|&j| one_based("geometry.chain", j, LIMBS))
                .collect::<Result<Vec<_>>>()?,
        };
        let geometry = LimbGeometry {
            seg_len: self.geometry.seg_len.clone(),
            chain,
            base: self.geometry.base.unwrap_or_default(),
        };
        geometry.validate(LIMBS).map_err(|e| invalid("geometry", e))?;

        for (i, s) in self.setpoints.iter().enumerate() {
            check_count(&format!("setpoints[{i}].theta"), LIMBS, s.theta.len())?;
        }
        let setpoints = SetpointSchedule::new(
            self.setpoints
                .iter()
                .map(|s| (s.t, PoseState::new(s.theta.clone())))
                .collect(),
        )
        .map_err(|e| invalid("setpoints", e))?;

        let disturbances = DisturbanceProfile {
            windows: self
                .disturbances
                .iter()
                .map(|d| DisturbanceWindow {
                    t_start: d.t_start,
                    t_end: d.t_end,
                    bias: d.bias.clone(),
                })
                .collect(),
        };
        disturbances.validate(LIMBS).map_err(|e| invalid("disturbances", e))?;

        let theta = self.initial.theta.clone().unwrap_or_else(|| vec![0.0; LIMBS]);
        check_count("initial.theta", LIMBS, theta.len())?;
        let temps = self.initial.temp.clone().unwrap_or_else(|| plant.ambient().to_vec());
        check_count("initial.temp", SMAS, temps.len())?;
        let initial = PlantState::new(PoseState::new(theta), &temps);

        let scenario = Scenario {
            plant,
            safety,
            gains,
            geometry,
            setpoints,
            disturbances,
            horizon: self.horizon,
            initial,
        };
        scenario.validate_config().map_err(|e| invalid("scenario", e))?;
        Ok(scenario)
    }
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario<f64>> {
    ScenarioFile::from_toml_str(&read_file(path)?)?.build()
}

pub fn parse_model(path: &Path) -> Result<(BlockLinearSystem<f64>, SafetyConfig)> {
    ModelFile::from_toml_str(&read_file(path)?)?.build()
}
