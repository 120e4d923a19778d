//! TOML run configuration for the ladder.

use std::path::{Path, PathBuf};

use expforge::ladder::{LadderConfig, LadderError};
use expforge::Parameter;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::parse_complex;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Missing { path: PathBuf, message: String },
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("config key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    /// Offending key, when the error is tied to one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

/// On-disk form: every key optional, `seed` as a complex literal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<String>,
    #[serde(rename = "S")]
    pub s: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub dx: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub x_cap: Option<f64>,
    pub tol: Option<f64>,
    pub r0: Option<f64>,
    pub p_max: Option<usize>,
    pub n_max: Option<usize>,
}

impl RawConfig {
    pub fn into_config(self, seed_override: Option<&str>) -> Result<LadderConfig, ConfigError> {
        let d = LadderConfig::default();
        let seed = match seed_override.or(self.seed.as_deref()) {
            Some(text) => {
                let z = parse_complex(text).map_err(|message| ConfigError::Invalid { key: "seed".into(), message })?;
                Parameter::new(z).map_err(|e| ConfigError::Invalid { key: "seed".into(), message: e.to_string() })?
            }
            None => d.seed,
        };
        let config = LadderConfig {
            s: self.s.unwrap_or(d.s),
            delta: self.delta.unwrap_or(d.delta),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            dx: self.dx.unwrap_or(d.dx),
            k: self.k.unwrap_or(d.k),
            x_cap: self.x_cap.unwrap_or(d.x_cap),
            tol: self.tol.unwrap_or(d.tol),
            seed,
            r0: self.r0.unwrap_or(d.r0),
            p_max: self.p_max.unwrap_or(d.p_max),
            n_max: self.n_max.unwrap_or(d.n_max),
        };
        config.validate().map_err(|e| match e {
            LadderError::InvalidConfig { field, message } => ConfigError::Invalid { key: field, message },
            other => ConfigError::Invalid { key: "config".into(), message: other.to_string() },
        })?;
        Ok(config)
    }
}

pub fn parse_config_str(text: &str, seed_override: Option<&str>) -> Result<LadderConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    raw.into_config(seed_override)
}

pub fn parse_config(path: &Path, seed_override: Option<&str>) -> Result<LadderConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Missing { path: path.to_path_buf(), message: e.to_string() })?;
    parse_config_str(&text, seed_override)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str("seed = \"2pi*i\"\n", None).unwrap();
        assert_eq!(c.dx, std::f64::consts::TAU);
        assert_eq!(c.seed, Parameter::two_pi_i(1).unwrap());
    }

    #[test]
    fn small_dx_names_key() {
        let e = parse_config_str("seed = \"2pi*i\"\ndx = 1.0\n", None).unwrap_err();
        assert_eq!(e.key(), Some("dx"));
        assert!(e.to_string().contains("2π"));
    }

    #[test]
    fn huge_x_cap_cites_overflow_guard() {
        let e = parse_config_str("x_cap = 1e6\n", None).unwrap_err();
        assert_eq!(e.key(), Some("x_cap"));
        assert!(e.to_string().contains("overflow guard"));
    }

    #[test]
    fn zero_seed_and_unknown_keys_rejected() {
        assert_eq!(parse_config_str("seed = \"0\"\n", None).unwrap_err().key(), Some("seed"));
        assert!(matches!(parse_config_str("bogus = 1\n", None), Err(ConfigError::Syntax(_))));
        assert!(matches!(parse_config(Path::new("/nonexistent/x.toml"), None), Err(ConfigError::Missing { .. })));
    }

    #[test]
    fn seed_override_wins() {
        let c = parse_config_str("seed = \"2pi*i\"\n", Some("4pi*i")).unwrap();
        assert_eq!(c.seed, Parameter::two_pi_i(2).unwrap());
    }
}
