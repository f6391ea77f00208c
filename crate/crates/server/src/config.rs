//! Server settings, read from TOML (or JSON when the file ends in `.json`).
//! Missing keys take their defaults.

use std::path::{Path, PathBuf};
use std::time::Duration;

use durian_core::roads::DEFAULT_REACH_EPSILON_M;
use durian_core::{GameConfig, MaskThresholds};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CONFIG_ENV: &str = "DURIAN_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub round_size: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub d_min: f64,
    pub max_attempts: u32,
    pub capture_radius: f64,
    pub v_max: f64,
    pub hp_start: f64,
    pub reach_epsilon: f64,
    pub t_face: f64,
    pub t_occluded: f64,
    pub gate_timeout_ms: u64,
    /// Base URL of the landmark detection service. Without one, `/gate/mask`
    /// only accepts landmarks supplied inline.
    pub landmark_provider: Option<String>,
}

impl Default for Settings {
    fn default() -> Self {
        let g = GameConfig::default();
        let t = MaskThresholds::default();
        Settings {
            round_size: g.round_size,
            r_min: g.r_min,
            r_max: g.r_max,
            d_min: g.d_min,
            max_attempts: g.max_attempts,
            capture_radius: g.capture_radius,
            v_max: g.v_max,
            hp_start: g.hp_start,
            reach_epsilon: DEFAULT_REACH_EPSILON_M,
            t_face: t.t_face,
            t_occluded: t.t_occluded,
            gate_timeout_ms: 5_000,
            landmark_provider: None,
        }
    }
}

impl Settings {
    pub fn game(&self) -> GameConfig {
        GameConfig {
            round_size: self.round_size,
            r_min: self.r_min,
            r_max: self.r_max,
            d_min: self.d_min,
            max_attempts: self.max_attempts,
            capture_radius: self.capture_radius,
            v_max: self.v_max,
            hp_start: self.hp_start,
        }
    }

    pub fn thresholds(&self) -> MaskThresholds {
        MaskThresholds { t_face: self.t_face, t_occluded: self.t_occluded }
    }

    pub fn gate_timeout(&self) -> Duration {
        Duration::from_millis(self.gate_timeout_ms)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.game().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let unit = 0.0..=1.0;
        if !unit.contains(&self.t_face) || !unit.contains(&self.t_occluded) {
            return Err(ConfigError::Invalid("mask thresholds must lie in [0, 1]".into()));
        }
        if !(self.reach_epsilon > 0.0) {
            return Err(ConfigError::Invalid("reach_epsilon must be positive".into()));
        }
        if self.gate_timeout_ms == 0 {
            return Err(ConfigError::Invalid("gate_timeout_ms must be positive".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str, json: bool) -> Result<Settings, String> {
        if json {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        }
    }

    pub fn load(path: &Path) -> Result<Settings, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        let json = path.extension().is_some_and(|e| e == "json");
        let s = Self::parse(&text, json)
            .map_err(|message| ConfigError::Parse { path: path.to_owned(), message })?;
        s.validate().map_err(|e| match e {
            ConfigError::Invalid(m) => ConfigError::Invalid(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok(s)
    }

    /// `DURIAN_CONFIG` wins over the path given on the command line.
    pub fn resolve(cli: Option<&Path>) -> Result<Settings, ConfigError> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        match from_env.as_deref().or(cli) {
            Some(p) => Self::load(p),
            None => Ok(Settings::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Settings::default().validate().unwrap();
        assert_eq!(Settings::default().round_size, 6);
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let s = Settings::parse("r_max = 300.0\nt_face = 0.7\n", false).unwrap();
        assert_eq!(s.r_max, 300.0);
        assert_eq!(s.t_face, 0.7);
        assert_eq!(s.r_min, Settings::default().r_min);
    }

    #[test]
    fn json_and_unknown_keys() {
        let s = Settings::parse(r#"{"round_size": 4}"#, true).unwrap();
        assert_eq!(s.round_size, 4);
        assert!(Settings::parse("rmax = 3.0", false).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.toml");
        std::fs::write(&p, "r_min = 500.0\nr_max = 100.0\n").unwrap();
        assert!(matches!(Settings::load(&p), Err(ConfigError::Invalid(_))));
    }
}
