//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Flag overrides are applied after
//! the file, and any key left unset keeps its default.

use slhe_core::engine::{EngineKind, EqualizerConfig, ToneMapSettings};
use slhe_core::{Error as CoreError, GroupPolicy, SigmaParams, SpatialKernel};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("{key}: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("{key}: {reason}")]
    Constraint { key: String, reason: String },
}

impl ConfigError {
    /// The key the error is about, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey(k) => Some(k),
            ConfigError::BadValue { key, .. } | ConfigError::Constraint { key, .. } => Some(key),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Box,
    Gauss,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub radius: usize,
    pub kernel: KernelKind,
    /// Gaussian window scale in pixels; defaults to `radius / 2`.
    pub sigma_s: Option<f64>,
    /// Box radius of the local-mean window when it should differ from the
    /// equalizer window.
    pub mean_radius: Option<usize>,
    pub bins: usize,
    pub lut_levels: usize,
    pub engine: EngineKind,
    pub policy: GroupPolicy,
    pub alpha: f64,
    pub saturation: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sigma_min: 64.0,
            sigma_max: 256.0,
            radius: 32,
            kernel: KernelKind::Box,
            sigma_s: None,
            mean_radius: None,
            bins: 256,
            lut_levels: 16,
            engine: EngineKind::Binned,
            policy: GroupPolicy::Paper,
            alpha: 1.0,
            saturation: 1.0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "sigma_min",
    "sigma_max",
    "radius",
    "kernel",
    "sigma_s",
    "mean_radius",
    "bins",
    "lut_levels",
    "engine",
    "policy",
    "alpha",
    "saturation",
];

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn constraint(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Constraint {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| bad(key, value))
}

fn real(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = num(key, value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, value))
    }
}

impl RunConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "sigma_min" => self.sigma_min = real(key, value)?,
            "sigma_max" => self.sigma_max = real(key, value)?,
            "radius" => self.radius = num(key, value)?,
            "sigma_s" => self.sigma_s = Some(real(key, value)?),
            "mean_radius" => self.mean_radius = Some(num(key, value)?),
            "bins" => self.bins = num(key, value)?,
            "lut_levels" => self.lut_levels = num(key, value)?,
            "alpha" => self.alpha = real(key, value)?,
            "saturation" => self.saturation = real(key, value)?,
            "kernel" => {
                self.kernel = match value {
                    "box" => KernelKind::Box,
                    "gauss" => KernelKind::Gauss,
                    _ => return Err(bad(key, value)),
                }
            }
            "engine" => {
                self.engine = match value {
                    "reference" => EngineKind::Reference,
                    "binned" => EngineKind::Binned,
                    _ => return Err(bad(key, value)),
                }
            }
            "policy" => {
                self.policy = match value {
                    "paper" => GroupPolicy::Paper,
                    "swapped" => GroupPolicy::Swapped,
                    _ => return Err(bad(key, value)),
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Equalizer window.
    pub fn kernel(&self) -> Result<SpatialKernel, ConfigError> {
        match self.kernel {
            KernelKind::Box => SpatialKernel::boxed(self.radius).map_err(|e| core_constraint("radius", e)),
            KernelKind::Gauss => {
                let sigma_s = self.sigma_s.unwrap_or(self.radius as f64 / 2.0);
                SpatialKernel::gaussian(sigma_s).map_err(|e| core_constraint("sigma_s", e))
            }
        }
    }

    pub fn sigma_params(&self) -> Result<SigmaParams, ConfigError> {
        if self.sigma_min > self.sigma_max {
            return Err(constraint("sigma_min/sigma_max", "sigma_min must not exceed sigma_max"));
        }
        SigmaParams::new(self.sigma_min, self.sigma_max, self.policy).map_err(|e| core_constraint("sigma_min/sigma_max", e))
    }

    pub fn equalizer(&self) -> Result<EqualizerConfig, ConfigError> {
        let cfg = EqualizerConfig {
            engine: self.engine,
            bins: self.bins,
            lut_levels: self.lut_levels,
            strength: self.alpha,
        };
        cfg.validate().map_err(|e| match e {
            CoreError::InvalidParameter { name: "strength", reason } => constraint("alpha", reason),
            other => core_constraint("bins/lut_levels", other),
        })?;
        Ok(cfg)
    }

    pub fn settings(&self) -> Result<ToneMapSettings, ConfigError> {
        if !(0.0..=1.0).contains(&self.saturation) {
            return Err(constraint("saturation", "must lie in [0, 1]"));
        }
        let mut settings = ToneMapSettings::new(self.kernel()?, self.sigma_params()?, self.equalizer()?, self.saturation);
        if let Some(r) = self.mean_radius {
            settings.mean_kernel = Some(SpatialKernel::boxed(r).map_err(|e| core_constraint("mean_radius", e))?);
        }
        Ok(settings)
    }
}

fn core_constraint(default_key: &str, e: CoreError) -> ConfigError {
    match e {
        CoreError::InvalidParameter { name, reason } if KEYS.contains(&name) => constraint(name, reason),
        other => constraint(default_key, other.to_string()),
    }
}

/// Parses `file_text`, applies `overrides` in order, and validates the result.
pub fn parse_config<K: AsRef<str>, V: AsRef<str>>(file_text: &str, overrides: &[(K, V)]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    for (n, raw) in file_text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: n + 1 });
        }
        cfg.set(key, value.trim())?;
    }
    for (key, value) in overrides {
        cfg.set(key.as_ref(), value.as_ref().trim())?;
    }
    cfg.settings()?;
    Ok(cfg)
}
