//! Settings resolved as flag > config file > default.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CONFIG_ENV: &str = "DYNN_CONFIG";

/// Contents of the optional TOML config file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub layers: Option<usize>,
    pub seed: Option<u64>,
    pub clustering: Option<String>,
    pub max_cond: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e.message()))
    }
}

/// Flags that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub layers: Option<usize>,
    pub seed: Option<u64>,
    pub clustering: Option<String>,
    pub max_cond: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub rtol: f64,
    pub atol: f64,
    pub layers: usize,
    pub seed: u64,
    pub clustering: String,
    pub max_cond: f64,
    pub config_file: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            layers: 1,
            seed: 0,
            clustering: "kmeans".into(),
            max_cond: 15.0,
            config_file: None,
        }
    }
}

impl Settings {
    pub fn resolve(flag_path: Option<&Path>, flags: &Overrides) -> Result<Self, CliError> {
        let path = flag_path
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        let file = match &path {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Self::merge(file, flags, path)
    }

    pub fn merge(file: FileConfig, flags: &Overrides, config_file: Option<PathBuf>) -> Result<Self, CliError> {
        let d = Settings::default();
        let s = Settings {
            rtol: flags.rtol.or(file.rtol).unwrap_or(d.rtol),
            atol: flags.atol.or(file.atol).unwrap_or(d.atol),
            layers: flags.layers.or(file.layers).unwrap_or(d.layers),
            seed: flags.seed.or(file.seed).unwrap_or(d.seed),
            clustering: flags.clustering.clone().or(file.clustering).unwrap_or(d.clustering),
            max_cond: flags.max_cond.or(file.max_cond).unwrap_or(d.max_cond),
            config_file,
        };
        if !(s.rtol > 0.0 && s.atol > 0.0) {
            return Err(CliError::Usage("rtol and atol must be positive".into()));
        }
        if s.clustering != "kmeans" {
            return Err(CliError::Usage(format!(
                "unknown clustering method '{}' (available: kmeans)",
                s.clustering
            )));
        }
        Ok(s)
    }
}
