//! Run configuration: parsing, validation, and the replay manifest.
//!
//! Configs are accepted as TOML or JSON mapping onto one schema; unknown keys
//! are rejected rather than ignored. Damping coefficients may be given in any
//! of the three bases and are normalized to the `m` basis internally, so
//! serializing a parsed config is idempotent.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{IntegratorScheme, Method, PhaseState, Representation, RunSettings};
use crate::model::{DampingSpec, Family, SystemParams};
use crate::noise::NoiseSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config at {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    A,
    M,
    Beta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingConfig {
    pub family: Family,
    pub basis: Basis,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub omega0: f64,
    pub gamma: f64,
    pub n: usize,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Internal,
    Vacuum,
    External,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
        }
    }
}

fn default_out_dir() -> String {
    "out".to_string()
}

fn default_one() -> usize {
    1
}

fn default_kappa() -> f64 {
    1.0
}

fn default_burn_in() -> f64 {
    0.3
}

/// On-disk run configuration. Scalar fields first so TOML serialization is
/// valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub scheme: Method,
    /// Integration step; defaults to `1e-3·(2π/ω₀)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub allow_coarse_dt: bool,
    pub representation: Representation,
    pub t_total: f64,
    pub seed: u64,
    #[serde(default = "default_one")]
    pub ensemble_size: usize,
    #[serde(default = "default_one")]
    pub sample_every: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    /// Initial conditions as `(x, v)` pairs; amplitude runs convert at t = 0.
    pub initial: Vec<[f64; 2]>,
    pub damping: DampingConfig,
    pub params: ParamsConfig,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

/// Validated, normalized run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: DampingSpec,
    pub params: SystemParams,
    pub noise: NoiseSpec,
    pub scheme: IntegratorScheme,
    pub representation: Representation,
    pub t_total: f64,
    pub seed: u64,
    pub ensemble_size: usize,
    pub sample_every: usize,
    pub kappa: f64,
    pub burn_in: f64,
    pub initial: Vec<PhaseState>,
    pub out_dir: PathBuf,
}

fn invalid(path: &str, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.to_string(),
    }
}

impl RunConfigFile {
    pub fn validate(&self) -> Result<RunConfig, ConfigError> {
        let spec = match self.damping.basis {
            Basis::A => DampingSpec::from_a(self.damping.family, &self.damping.coeffs),
            Basis::M => DampingSpec::from_m(self.damping.family, self.damping.coeffs.clone()),
            Basis::Beta => DampingSpec::from_beta(self.damping.family, &self.damping.coeffs),
        }
        .map_err(|e| invalid("damping.coeffs", e))?;

        let params = SystemParams::new(
            self.params.omega0,
            self.params.gamma,
            self.params.n,
            self.params.theta,
        )
        .map_err(|e| invalid("params", e))?;
        params
            .check_spec(&spec)
            .map_err(|e| invalid("params.n", e))?;

        let noise = match (self.noise.kind, self.noise.intensity) {
            (NoiseKind::External, Some(intensity)) => {
                if !intensity.is_finite() || intensity < 0.0 {
                    return Err(invalid("noise.intensity", "must be finite and >= 0"));
                }
                NoiseSpec::External { intensity }
            }
            (NoiseKind::External, None) => {
                return Err(invalid(
                    "noise.intensity",
                    "required when noise.kind = \"external\"",
                ));
            }
            (kind, Some(_)) => {
                return Err(invalid(
                    "noise.intensity",
                    format!("only allowed for external noise (kind is {kind:?})"),
                ));
            }
            (NoiseKind::Internal, None) => NoiseSpec::Internal,
            (NoiseKind::Vacuum, None) => NoiseSpec::Vacuum,
            (NoiseKind::None, None) => NoiseSpec::None,
        };

        let scheme = IntegratorScheme {
            method: self.scheme,
            dt: self
                .dt
                .unwrap_or(crate::dynamics::DEFAULT_DT_PERIODS * params.period()),
            allow_coarse_dt: self.allow_coarse_dt,
        };
        scheme.validate(&params).map_err(|e| invalid("dt", e))?;

        if !self.t_total.is_finite() || self.t_total <= 0.0 {
            return Err(invalid("t_total", "must be positive and finite"));
        }
        if self.ensemble_size == 0 {
            return Err(invalid("ensemble_size", "must be >= 1"));
        }
        if self.sample_every == 0 {
            return Err(invalid("sample_every", "must be >= 1"));
        }
        if !self.kappa.is_finite() || self.kappa < 0.0 {
            return Err(invalid("kappa", "must be finite and >= 0"));
        }
        if !(0.0..=0.9).contains(&self.burn_in) {
            return Err(invalid("burn_in", "must lie in [0, 0.9]"));
        }
        if self.initial.is_empty() {
            return Err(invalid("initial", "at least one initial condition required"));
        }
        for (i, pair) in self.initial.iter().enumerate() {
            if !pair[0].is_finite() || !pair[1].is_finite() {
                return Err(invalid(&format!("initial[{i}]"), "must be finite"));
            }
        }

        Ok(RunConfig {
            spec,
            params,
            noise,
            scheme,
            representation: self.representation,
            t_total: self.t_total,
            seed: self.seed,
            ensemble_size: self.ensemble_size,
            sample_every: self.sample_every,
            kappa: self.kappa,
            burn_in: self.burn_in,
            initial: self
                .initial
                .iter()
                .map(|p| PhaseState { x: p[0], v: p[1] })
                .collect(),
            out_dir: PathBuf::from(&self.outputs.dir),
        })
    }
}

impl RunConfig {
    /// Normalized on-disk form (m basis).
    pub fn to_file(&self) -> RunConfigFile {
        RunConfigFile {
            scheme: self.scheme.method,
            dt: Some(self.scheme.dt),
            allow_coarse_dt: self.scheme.allow_coarse_dt,
            representation: self.representation,
            t_total: self.t_total,
            seed: self.seed,
            ensemble_size: self.ensemble_size,
            sample_every: self.sample_every,
            kappa: self.kappa,
            burn_in: self.burn_in,
            initial: self.initial.iter().map(|s| [s.x, s.v]).collect(),
            damping: DampingConfig {
                family: self.spec.family(),
                basis: Basis::M,
                coeffs: self.spec.m().to_vec(),
            },
            params: ParamsConfig {
                omega0: self.params.omega0,
                gamma: self.params.gamma,
                n: self.params.n,
                theta: self.params.theta,
            },
            noise: match self.noise {
                NoiseSpec::Internal => NoiseConfig {
                    kind: NoiseKind::Internal,
                    intensity: None,
                },
                NoiseSpec::Vacuum => NoiseConfig {
                    kind: NoiseKind::Vacuum,
                    intensity: None,
                },
                NoiseSpec::External { intensity } => NoiseConfig {
                    kind: NoiseKind::External,
                    intensity: Some(intensity),
                },
                NoiseSpec::None => NoiseConfig {
                    kind: NoiseKind::None,
                    intensity: None,
                },
            },
            outputs: OutputConfig {
                dir: self.out_dir.to_string_lossy().into_owned(),
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serializes")
    }

    /// Integration settings for one ensemble member.
    pub fn settings_for(&self, stream: u64) -> RunSettings {
        RunSettings {
            scheme: self.scheme,
            t_total: self.t_total,
            seed: self.seed,
            stream,
            representation: self.representation,
            sample_every: self.sample_every,
            kappa: self.kappa,
        }
    }

    /// Total trajectories in the run: one per (initial condition, member).
    pub fn trajectory_count(&self) -> usize {
        self.initial.len() * self.ensemble_size
    }
}

/// Parse a config document into its on-disk form, accepting JSON (`{…}`) or
/// TOML.
pub fn parse_config_file(text: &str) -> Result<RunConfigFile, ConfigError> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}

/// Parse and validate a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_file(text)?.validate()
}

/// Replay manifest: the normalized config plus toolkit identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub toolkit: String,
    pub version: String,
    pub config: RunConfigFile,
}

impl Manifest {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            toolkit: "lienard".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.to_file(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}
