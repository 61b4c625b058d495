//! Defaults from `allocwise.toml`.
//!
//! Precedence is flags > environment > file > built-ins. Flags and
//! environment variables are merged by clap; this module supplies the file
//! layer and the built-ins underneath.

use std::net::IpAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

pub const DEFAULT_CONFIG_FILE: &str = "allocwise.toml";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub store_dir: Option<PathBuf>,
    pub penalty_rate: Option<f64>,
    pub ahp: AhpSection,
    pub forecast: ForecastSection,
    pub serve: ServeSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AhpSection {
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastSection {
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub hidden_size: Option<usize>,
    pub lookback: Option<usize>,
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub bind: Option<IpAddr>,
    pub port: Option<u16>,
    pub cors_origins: Option<Vec<String>>,
    pub forecast_timeout_secs: Option<u64>,
}

#[derive(Debug)]
pub enum ConfigError {
    Read(PathBuf, std::io::Error),
    Parse(PathBuf, String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Read(p, e) => write!(f, "cannot read config {}: {e}", p.display()),
            Self::Parse(p, e) => write!(f, "invalid config {}: {e}", p.display()),
        }
    }
}

impl FileConfig {
    /// An explicit path must exist; the implicit `./allocwise.toml` is optional.
    pub fn load(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        let (path, required) = match explicit {
            Some(p) => (p.to_path_buf(), true),
            None => (PathBuf::from(DEFAULT_CONFIG_FILE), false),
        };
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(ConfigError::Read(path, e)),
        };
        Self::parse(&text).map_err(|e| ConfigError::Parse(path, e))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let c = FileConfig::parse(
            r#"
            store_dir = "data"
            penalty_rate = 0.05
            [ahp]
            tolerance = 1e-12
            max_iterations = 500
            [forecast]
            horizon = 30
            seed = 9
            [serve]
            bind = "0.0.0.0"
            port = 9000
            cors_origins = ["http://localhost:5173"]
            "#,
        )
        .unwrap();
        assert_eq!(c.store_dir.as_deref(), Some(Path::new("data")));
        assert_eq!(c.ahp.max_iterations, Some(500));
        assert_eq!(c.forecast.seed, Some(9));
        assert_eq!(c.serve.port, Some(9000));
    }

    #[test]
    fn empty_and_unknown() {
        assert_eq!(FileConfig::parse("").unwrap(), FileConfig::default());
        assert!(FileConfig::parse("colour = 1").is_err());
        assert!(FileConfig::parse("[ahp]\ntolerance = \"tight\"").is_err());
    }

    #[test]
    fn implicit_file_optional_explicit_required() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.toml");
        assert!(matches!(FileConfig::load(Some(&missing)), Err(ConfigError::Read(..))));
    }
}
