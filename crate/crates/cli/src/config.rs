//! JSON run and study documents.

use std::path::PathBuf;

use nsk_core::consistency::StudySettings;
use nsk_core::mesh::Mesh;
use nsk_core::mesh::{project_initial_state, State};
use nsk_core::model::FluidParams;
use nsk_core::timeloop::{StabilityConstants, TimeControls};
use nsk_core::NskError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snapshot::SnapshotFormat;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown key `{key}` at `{path}`")]
    UnknownKey { key: String, path: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl From<NskError> for ConfigError {
    fn from(e: NskError) -> Self {
        match e {
            NskError::InvalidParam(msg) => ConfigError::Invalid(msg),
            other => ConfigError::Invalid(other.to_string()),
        }
    }
}

fn default_delta() -> f64 {
    FluidParams::<f64>::DEFAULT_DELTA
}
fn default_cfl() -> f64 {
    TimeControls::<f64>::DEFAULT_CFL
}
fn default_record_every() -> usize {
    TimeControls::<f64>::DEFAULT_RECORD_EVERY
}
fn default_max_steps() -> usize {
    TimeControls::<f64>::DEFAULT_MAX_STEPS
}
fn default_battery_kmax() -> u32 {
    2
}
fn default_true() -> bool {
    true
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn is_false(b: &bool) -> bool {
    !*b
}

/// Relative floor applied to the lowest initial density when `rho_floor`
/// is not given.
pub const RELATIVE_RHO_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub a: f64,
    pub gamma: f64,
    pub mu: f64,
    pub kappa: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_floor: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub convective: f64,
    pub viscous: f64,
    pub dispersive: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        let s = StabilityConstants::<f64>::default();
        StabilityConfig {
            convective: s.convective,
            viscous: s.viscous,
            dispersive: s.dispersive,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsConfig {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default, skip_serializing_if = "is_false")]
    pub freeze_lambda: bool,
    #[serde(default)]
    pub stability: StabilityConfig,
}

/// Initial condition. Velocities default to zero. A composite adds the
/// densities and the momenta of its parts, so its velocity is the
/// density-weighted mean of theirs; parts may not be composites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant {
        rho: f64,
        #[serde(default)]
        u: f64,
        #[serde(default)]
        v: f64,
    },
    /// `rho = rho_mean + amplitude sin(2 pi kx x) sin(2 pi ky y)` moving with `(u, v)`.
    SineBump {
        rho_mean: f64,
        amplitude: f64,
        kx: u32,
        ky: u32,
        #[serde(default)]
        u: f64,
        #[serde(default)]
        v: f64,
    },
    Composite {
        parts: Vec<InitialCondition>,
    },
}

impl InitialCondition {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            &InitialCondition::Constant { rho, u, v } => {
                if !finite(&[rho, u, v]) {
                    return Err(invalid("initial values must be finite"));
                }
                if rho <= 0.0 {
                    return Err(invalid("constant rho must be positive"));
                }
            }
            &InitialCondition::SineBump {
                rho_mean,
                amplitude,
                u,
                v,
                ..
            } => {
                if !finite(&[rho_mean, amplitude, u, v]) {
                    return Err(invalid("initial values must be finite"));
                }
                if amplitude.abs() >= rho_mean {
                    return Err(invalid("amplitude must be smaller than rho_mean"));
                }
            }
            InitialCondition::Composite { parts } => {
                if parts.is_empty() {
                    return Err(invalid(
                        "composite initial condition needs at least one part",
                    ));
                }
                for p in parts {
                    if matches!(p, InitialCondition::Composite { .. }) {
                        return Err(invalid("composite parts must be constant or sine_bump"));
                    }
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Density and momentum at a point.
    pub fn density_momentum(&self, x: f64, y: f64) -> (f64, f64, f64) {
        match self {
            &InitialCondition::Constant { rho, u, v } => (rho, rho * u, rho * v),
            &InitialCondition::SineBump {
                rho_mean,
                amplitude,
                kx,
                ky,
                u,
                v,
            } => {
                let tau = std::f64::consts::TAU;
                let rho = rho_mean
                    + amplitude * (tau * kx as f64 * x).sin() * (tau * ky as f64 * y).sin();
                (rho, rho * u, rho * v)
            }
            InitialCondition::Composite { parts } => {
                parts.iter().fold((0.0, 0.0, 0.0), |acc, p| {
                    let (r, mx, my) = p.density_momentum(x, y);
                    (acc.0 + r, acc.1 + mx, acc.2 + my)
                })
            }
        }
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        self.density_momentum(x, y).0
    }

    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        let (rho, mx, my) = self.density_momentum(x, y);
        (mx / rho, my / rho)
    }

    /// Guaranteed lower bound of the density.
    pub fn density_lower_bound(&self) -> f64 {
        match self {
            &InitialCondition::Constant { rho, .. } => rho,
            &InitialCondition::SineBump {
                rho_mean,
                amplitude,
                kx,
                ky,
                ..
            } => {
                if kx == 0 || ky == 0 {
                    rho_mean
                } else {
                    rho_mean - amplitude.abs()
                }
            }
            InitialCondition::Composite { parts } => parts
                .iter()
                .map(InitialCondition::density_lower_bound)
                .sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: SnapshotFormat,
    /// Write a snapshot at every record.
    #[serde(default = "default_true")]
    pub snapshots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            format: SnapshotFormat::default(),
            snapshots: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `[M, N]` cells along x and y.
    pub mesh: (usize, usize),
    pub params: ParamsConfig,
    pub controls: ControlsConfig,
    pub initial: InitialCondition,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        Mesh::<f64>::new(self.mesh.0, self.mesh.1)?;
        self.initial.validate()?;
        self.fluid_params()?;
        self.time_controls()?;
        Ok(())
    }

    pub fn mesh(&self) -> Result<Mesh<f64>, ConfigError> {
        Ok(Mesh::new(self.mesh.0, self.mesh.1)?)
    }

    pub fn fluid_params(&self) -> Result<FluidParams<f64>, ConfigError> {
        let p = &self.params;
        let floor = match p.rho_floor {
            Some(f) => f,
            None => RELATIVE_RHO_FLOOR * self.initial.density_lower_bound(),
        };
        Ok(FluidParams::new(p.a, p.gamma, p.mu, p.kappa)?
            .with_delta(p.delta)?
            .with_rho_floor(floor)?)
    }

    pub fn time_controls(&self) -> Result<TimeControls<f64>, ConfigError> {
        let c = &self.controls;
        let mut tc = TimeControls::new(c.t_end)?
            .with_cfl(c.cfl)?
            .with_record_every(c.record_every)?
            .with_max_steps(c.max_steps)?;
        tc.freeze_lambda = c.freeze_lambda;
        tc.stability = StabilityConstants {
            convective: c.stability.convective,
            viscous: c.stability.viscous,
            dispersive: c.stability.dispersive,
        };
        Ok(tc.validated()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// `base.mesh` is the coarsest level unless `levels` is given.
    pub base: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<(usize, usize)>>,
    #[serde(default = "default_battery_kmax")]
    pub battery_kmax: u32,
}

impl StudyConfig {
    /// Explicit levels, or three levels doubling from `base.mesh`.
    pub fn levels(&self) -> Vec<(usize, usize)> {
        match &self.levels {
            Some(l) => l.clone(),
            None => {
                let (m, n) = self.base.mesh;
                vec![(m, n), (2 * m, 2 * n), (4 * m, 4 * n)]
            }
        }
    }

    pub fn settings(&self) -> StudySettings<f64> {
        StudySettings {
            battery_kmax: self.battery_kmax,
            ..StudySettings::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.base.validate()?;
        let levels = self.levels();
        if levels.len() < 2 {
            return Err(invalid("a study needs at least two levels"));
        }
        for &(m, n) in &levels {
            Mesh::<f64>::new(m, n)?;
        }
        let step = |c: usize, f: usize| f == c || f == 2 * c;
        for w in levels.windows(2) {
            let ((cm, cn), (fm, fn_)) = (w[0], w[1]);
            if !(step(cm, fm) && step(cn, fn_)) || w[0] == w[1] {
                return Err(invalid(format!(
                    "levels {cm}x{cn} and {fm}x{fn_} are not nested by a factor of 2"
                )));
            }
        }
        Ok(())
    }
}

/// A parsed document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Config {
    Run(RunConfig),
    Study(StudyConfig),
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            Config::Run(r) => r.validate(),
            Config::Study(s) => s.validate(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}

/// Cell-averaged density and velocity; momentum formed cellwise.
pub fn project_initial(
    initial: &InitialCondition,
    mesh: Mesh<f64>,
) -> Result<State<f64>, NskError> {
    project_initial_state(
        mesh,
        |x, y| initial.density(x, y),
        |x, y| initial.velocity(x, y).0,
        |x, y| initial.velocity(x, y).1,
    )
}

/// Discrete initial state of a run on `mesh`.
pub fn build_initial(config: &RunConfig, mesh: Mesh<f64>) -> Result<State<f64>, NskError> {
    project_initial(&config.initial, mesh)
}

/// Rejects a `rho_floor` that the initial state already violates.
pub fn check_floor(state: &State<f64>, params: &FluidParams<f64>) -> Result<(), ConfigError> {
    let min = state.rho.min();
    if min <= params.rho_floor {
        return Err(invalid(format!(
            "rho_floor {:e} must lie below the initial minimum density {min:e}",
            params.rho_floor
        )));
    }
    Ok(())
}

/// Parses and validates a run or study document.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    let kind = match value.as_object_mut().map(|o| o.remove("kind")) {
        Some(Some(serde_json::Value::String(k))) if k == "run" || k == "study" => k,
        Some(Some(other)) => {
            return Err(ConfigError::Schema {
                path: "kind".into(),
                message: format!("expected \"run\" or \"study\", got {other}"),
            })
        }
        _ => {
            return Err(ConfigError::Schema {
                path: ".".into(),
                message: "expected an object with a top-level \"kind\"".into(),
            })
        }
    };
    let config = if kind == "run" {
        Config::Run(deserialize_body(value)?)
    } else {
        Config::Study(deserialize_body(value)?)
    };
    config.validate()?;
    Ok(config)
}

fn deserialize_body<T: serde::de::DeserializeOwned>(
    value: serde_json::Value,
) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        match unknown_key(&message) {
            Some(key) => ConfigError::UnknownKey { key, path },
            None => ConfigError::Schema { path, message },
        }
    })
}

fn unknown_key(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}
