//! JSON config files whose keys are overridden by command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

/// Marks errors in user-supplied configuration (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: Map<String, Value>,
}

fn norm(key: &str) -> String {
    key.replace('_', "-")
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| config_error(format!("config {}: {e}", path.display())))?;
        let Value::Object(m) = v else {
            bail!(ConfigError(format!("config {} must be a JSON object", path.display())));
        };
        Ok(Self {
            values: m.into_iter().map(|(k, v)| (norm(&k), v)).collect(),
        })
    }

    /// Flag value, else config value, else `None`.
    pub fn opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| config_error(format!("config key '{key}': {e}"))),
        }
    }

    pub fn get<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.opt(flag, key)?
            .ok_or_else(|| config_error(format!("--{key} is required (flag or config key)")))
    }
}

/// `a:b:step` (inclusive) or a comma-separated list.
pub fn parse_alpha2_list(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| config_error(format!("'{s}' is not a number in alpha2 list '{spec}'")))
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!(ConfigError(format!("range '{spec}' must be start:stop:step")));
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0 && b >= a) {
            bail!(ConfigError(format!("range '{spec}' needs stop >= start and step > 0")));
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        // Snap to the step grid so 0 is hit exactly.
        Ok((0..=n).map(|i| ((a + i as f64 * h) / h).round() * h).map(|v| (v * 1e12).round() / 1e12).collect())
    } else {
        spec.split(',').map(num).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha2_ranges() {
        let v = parse_alpha2_list("-0.05:0.2:0.01").unwrap();
        assert_eq!(v.len(), 26);
        assert_eq!(v[5], 0.0);
        assert_eq!(v[25], 0.2);
        assert_eq!(parse_alpha2_list("0,-0.002").unwrap(), vec![0.0, -0.002]);
        assert!(parse_alpha2_list("0:1").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"alpha2": 0.5, "per_decade": 7}"#).unwrap();
        let s = Settings::load(Some(&p)).unwrap();
        assert_eq!(s.get::<f64>(None, "alpha2", 0.0).unwrap(), 0.5);
        assert_eq!(s.get(Some(0.1), "alpha2", 0.0).unwrap(), 0.1);
        assert_eq!(s.get::<usize>(None, "per-decade", 10).unwrap(), 7);
        assert!(s.get::<usize>(None, "alpha2", 1).is_err());
    }
}
