//! The project `.ini` file written by `init` and extended by every later
//! step, so the file always holds the full effective configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use thiserror::Error;

pub const DEFAULT_HOST: &str = "127.0.0.1";
pub const DEFAULT_PORT: u16 = 8000;
pub const HOST_ENV: &str = "HYPERSHELF_HOST";
pub const PORT_ENV: &str = "HYPERSHELF_PORT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {0} not found; run `hypershelf init` first")]
    Missing(PathBuf),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: missing key [{section}] {key}")]
    MissingKey { path: PathBuf, section: &'static str, key: &'static str },
    #[error("{path}: invalid value for [{section}] {key}: {value:?}")]
    InvalidValue { path: PathBuf, section: String, key: String, value: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone)]
pub struct ProjectConfig {
    path: PathBuf,
    ini: Ini,
}

impl ProjectConfig {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into(), ini: Ini::new() }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        if !path.is_file() {
            return Err(ConfigError::Missing(path.to_path_buf()));
        }
        let ini = Ini::load_from_file(path)
            .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        Ok(Self { path: path.to_path_buf(), ini })
    }

    pub fn save(&self) -> Result<(), ConfigError> {
        self.ini.write_to_file(&self.path).map_err(|source| ConfigError::Io { path: self.path.clone(), source })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Directory holding the config file; relative paths resolve from here.
    pub fn base_dir(&self) -> PathBuf {
        match self.path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        }
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.get_from(Some(section), key)
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl ToString) {
        self.ini.with_section(Some(section)).set(key, value.to_string());
    }

    pub fn remove(&mut self, section: &str, key: &str) {
        if let Some(s) = self.ini.section_mut(Some(section)) {
            s.remove(key);
        }
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.ini.section(Some(section)).is_some()
    }

    pub fn clear_section(&mut self, section: &str) {
        self.ini.delete(Some(section));
    }

    pub fn require(&self, section: &'static str, key: &'static str) -> Result<&str, ConfigError> {
        self.get(section, key).ok_or_else(|| ConfigError::MissingKey { path: self.path.clone(), section, key })
    }

    pub fn parse<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v.trim().parse().map(Some).map_err(|_| ConfigError::InvalidValue {
                path: self.path.clone(),
                section: section.to_string(),
                key: key.to_string(),
                value: v.to_string(),
            }),
        }
    }

    pub fn flag(&self, section: &str, key: &str) -> Result<bool, ConfigError> {
        Ok(self.parse(section, key)?.unwrap_or(false))
    }

    /// A path value, resolved against [`Self::base_dir`] when relative.
    pub fn path_value(&self, section: &'static str, key: &'static str) -> Result<PathBuf, ConfigError> {
        let p = PathBuf::from(self.require(section, key)?);
        Ok(if p.is_absolute() { p } else { self.base_dir().join(p) })
    }

    /// Whitespace-separated list.
    pub fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Vec<T>, ConfigError> {
        let Some(v) = self.get(section, key) else { return Ok(Vec::new()) };
        v.split_whitespace()
            .map(|s| {
                s.parse().map_err(|_| ConfigError::InvalidValue {
                    path: self.path.clone(),
                    section: section.to_string(),
                    key: key.to_string(),
                    value: v.to_string(),
                })
            })
            .collect()
    }
}

/// Host and port with environment overrides applied over the config file.
pub fn resolve_address(config: &ProjectConfig, port_flag: Option<u16>) -> Result<(String, u16), ConfigError> {
    let invalid = |key: &str, value: String| ConfigError::InvalidValue {
        path: PathBuf::from(format!("${key}")),
        section: "env".into(),
        key: key.to_string(),
        value,
    };
    let host = match std::env::var(HOST_ENV) {
        Ok(h) if !h.is_empty() => h,
        _ => config.get("serve", "host").unwrap_or(DEFAULT_HOST).to_string(),
    };
    let port = match (port_flag, std::env::var(PORT_ENV)) {
        (Some(p), _) => p,
        (None, Ok(p)) if !p.is_empty() => p.trim().parse().map_err(|_| invalid(PORT_ENV, p))?,
        _ => config.parse("serve", "port")?.unwrap_or(DEFAULT_PORT),
    };
    Ok((host, port))
}
