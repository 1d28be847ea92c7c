//! Reading and writing platform configurations as JSON.

use std::fs;
use std::path::{Path, PathBuf};

use cimvp_core::config::{preset_by_name, ValidationError, VpConfig, PRESET_NAMES};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: ValidationError,
    },
    #[error("unknown preset {0:?} (known: {known})", known = PRESET_NAMES.join(", "))]
    UnknownPreset(String),
}

pub fn parse_config(text: &str, path: &Path) -> Result<VpConfig, ConfigError> {
    let cfg: VpConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate().map_err(|source| ConfigError::Invalid {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(cfg)
}

/// Loads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<VpConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

pub fn to_json(cfg: &VpConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

pub fn save_config(cfg: &VpConfig, path: impl AsRef<Path>) -> Result<(), ConfigError> {
    let path = path.as_ref();
    fs::write(path, to_json(cfg) + "\n").map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `preset:NAME` or a path to a JSON file.
pub fn resolve(spec: &str) -> Result<VpConfig, ConfigError> {
    match spec.strip_prefix("preset:") {
        Some(name) => preset_by_name(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string())),
        None => load_config(spec),
    }
}
