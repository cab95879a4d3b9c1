//! Plain-text `key = value` experiment configuration with flag overrides.
//!
//! Every command resolves its effective configuration (defaults, then config
//! file, then command-line flags) and echoes it as `config.txt` into the
//! output directory; re-running with `--config config.txt` reproduces the
//! run byte for byte.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    /// Typed lookup; config-file values are only consulted when the flag was
    /// not given.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::Config(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }
}

/// Resolution order: flag, then config file, then default.
pub fn resolve<T: FromStr + Clone>(
    flag: Option<T>,
    file: &ConfigFile,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    if let Some(v) = flag {
        return Ok(v);
    }
    Ok(file.get::<T>(key)?.unwrap_or(default))
}

pub fn resolve_opt<T: FromStr + Clone>(
    flag: Option<T>,
    file: &ConfigFile,
    key: &str,
) -> Result<Option<T>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    file.get::<T>(key)
}

/// Serializer for the `config.txt` echo.
#[derive(Debug, Default)]
pub struct ConfigEcho {
    lines: Vec<(String, String)>,
}

impl ConfigEcho {
    pub fn push(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn push_opt(&mut self, key: &str, value: Option<impl Display>) {
        if let Some(v) = value {
            self.push(key, v);
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut out = String::new();
        for (k, v) in &self.lines {
            out.push_str(&format!("{k} = {v}\n"));
        }
        let path = dir.join("config.txt");
        std::fs::write(&path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
