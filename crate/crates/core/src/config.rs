//! Simulation configuration: TOML (or JSON) file, defaults, validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::{BatteryModelParams, ChargeProfileParams};
use crate::channel::ChannelModel;
use crate::error::ModelError;
use crate::laser::{BeamGeometry, LaserDiodeParams};
use crate::power_chain::DcDcParams;
use crate::pv::{MpptSettings, PvPanelParams};

/// The shipped default configuration file.
pub const DEFAULT_TOML: &str = include_str!("../../../configs/default.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config {path}: {message}")]
    Syntax { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(#[from] ModelError),
}

impl ConfigError {
    /// Offending field for invariant violations.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid(ModelError::InvalidParam { field, .. }) => Some(field),
            _ => None,
        }
    }
}

/// Timeouts for the networked runners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSettings {
    /// How long the receiver waits for a BEAM reply within one step.
    pub beam_timeout_ms: u64,
    /// Consecutive steps without a reply tolerated before faulting.
    pub grace_steps: u32,
}

impl Default for NetworkSettings {
    fn default() -> Self {
        Self {
            beam_timeout_ms: 2000,
            grace_steps: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt_s: f64,
    pub max_steps: u64,
    pub fixed_baseline_power_w: f64,
    /// The monitor sends feedback every this many steps.
    pub feedback_interval_steps: u32,
    pub laser: LaserDiodeParams,
    pub beam: BeamGeometry,
    pub pv: PvPanelParams,
    pub mppt: MpptSettings,
    pub dcdc: DcDcParams,
    pub profile: ChargeProfileParams,
    pub battery: BatteryModelParams,
    pub channel: ChannelModel,
    pub network: NetworkSettings,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_s: 1.0,
            max_steps: 100_000,
            fixed_baseline_power_w: 4.2,
            feedback_interval_steps: 1,
            laser: LaserDiodeParams::default(),
            beam: BeamGeometry::default(),
            pv: PvPanelParams::default(),
            mppt: MpptSettings::default(),
            dcdc: DcDcParams::default(),
            profile: ChargeProfileParams::default(),
            battery: BatteryModelParams::default(),
            channel: ChannelModel::default(),
            network: NetworkSettings::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.dt_s.is_finite() && self.dt_s > 0.0) {
            return Err(ModelError::invalid("dt_s", "must be finite and > 0"));
        }
        if self.max_steps == 0 {
            return Err(ModelError::invalid("max_steps", "must be > 0"));
        }
        if !(self.fixed_baseline_power_w.is_finite() && self.fixed_baseline_power_w >= 0.0) {
            return Err(ModelError::invalid("fixed_baseline_power_w", "must be finite and >= 0"));
        }
        if self.feedback_interval_steps == 0 {
            return Err(ModelError::invalid("feedback_interval_steps", "must be >= 1"));
        }
        self.laser.validate()?;
        self.beam.validate()?;
        self.pv.validate()?;
        self.mppt.validate()?;
        self.dcdc.validate()?;
        self.profile.validate()?;
        self.battery.validate()?;
        self.channel.validate()?;
        if self.network.beam_timeout_ms == 0 {
            return Err(ModelError::invalid("network.beam_timeout_ms", "must be > 0"));
        }
        Ok(())
    }

    /// Parses TOML text, filling omitted fields with defaults, and validates.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: SimConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let config: SimConfig = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Canonical TOML dump; parsing it back yields an equal config.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes to JSON")
    }
}

/// Reads a config file. `.json` files are parsed as JSON, anything else as TOML.
pub fn parse_config(path: impl AsRef<Path>) -> Result<SimConfig, ConfigError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: shown.clone(),
        source,
    })?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        SimConfig::from_json_str(&text)
    } else {
        SimConfig::from_toml_str(&text)
    };
    parsed.map_err(|e| match e {
        ConfigError::Syntax { message, .. } => ConfigError::Syntax { path: shown, message },
        other => other,
    })
}
