//! Service configuration: a `key = value` file plus `MDR_*` environment overrides.
//!
//! ```text
//! # comments start with '#'
//! listen_addr = 127.0.0.1:8080
//! data_dir = /var/lib/mdr
//! token_secret = change-me
//! users_file = /etc/mdr/users.json
//! token_ttl = 3600
//! portal.mode = fixture
//! portal.fixture_path = /etc/mdr/portal.json
//! ```

use std::path::{Path, PathBuf};

use crate::portal::{PortalConfig, PortalMode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid value for {key}: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub listen_addr: String,
    pub data_dir: PathBuf,
    pub token_secret: Option<String>,
    pub users_file: Option<PathBuf>,
    /// Lifetime of issued tokens, in seconds.
    pub token_ttl: u64,
    pub portal: PortalConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            listen_addr: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("mdr-data"),
            token_secret: None,
            users_file: None,
            token_ttl: 3600,
            portal: PortalConfig::default(),
        }
    }
}

const ENV_KEYS: [(&str, &str); 9] = [
    ("MDR_LISTEN_ADDR", "listen_addr"),
    ("MDR_DATA_DIR", "data_dir"),
    ("MDR_TOKEN_SECRET", "token_secret"),
    ("MDR_USERS_FILE", "users_file"),
    ("MDR_TOKEN_TTL", "token_ttl"),
    ("MDR_PORTAL_MODE", "portal.mode"),
    ("MDR_PORTAL_ENDPOINT", "portal.endpoint"),
    ("MDR_PORTAL_API_KEY", "portal.api_key"),
    ("MDR_PORTAL_FIXTURE_PATH", "portal.fixture_path"),
];

impl Config {
    /// Parses `key = value` lines on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected key = value, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                ConfigError::Invalid { key, message } if key.is_empty() => {
                    ConfigError::Syntax { line: i + 1, message }
                }
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let invalid = |message: String| ConfigError::Invalid { key: key.to_string(), message };
        let opt = |v: &str| (!v.is_empty()).then(|| v.to_string());
        match key {
            "listen_addr" => self.listen_addr = value.to_string(),
            "data_dir" => self.data_dir = PathBuf::from(value),
            "token_secret" => self.token_secret = opt(value),
            "users_file" => self.users_file = opt(value).map(PathBuf::from),
            "token_ttl" => {
                self.token_ttl = value.parse().map_err(|e: std::num::ParseIntError| invalid(e.to_string()))?;
            }
            "portal.mode" => self.portal.mode = value.parse::<PortalMode>().map_err(invalid)?,
            "portal.endpoint" => self.portal.endpoint = opt(value),
            "portal.api_key" => self.portal.api_key = opt(value),
            "portal.fixture_path" => self.portal.fixture_path = opt(value),
            other => {
                return Err(ConfigError::Invalid { key: String::new(), message: format!("unknown key `{other}`") });
            }
        }
        Ok(())
    }

    /// Applies `MDR_*` overrides through `lookup` (normally `std::env::var`).
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        for (var, key) in ENV_KEYS {
            if let Some(value) = lookup(var) {
                self.set(key, value.trim())?;
            }
        }
        Ok(())
    }

    pub fn from_env(mut self) -> Result<Self, ConfigError> {
        self.apply_env(|k| std::env::var(k).ok())?;
        Ok(self)
    }
}
