//! Plain-text `key = value` configuration files. Flags always win over the
//! file; the file wins over built-in defaults.

use anyhow::{bail, Context, Result};
use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: HashMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            // tolerate [section] headers so exported INI files round-trip
            if line.starts_with('[') && line.ends_with(']') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`, got `{raw}`", i + 1);
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { values })
    }

    /// Flag value if given, else the config value under `key`, else `default`.
    pub fn resolve<T: FromStr + Copy>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(s) => s
                .parse()
                .map_err(|e| anyhow::anyhow!("config key `{key}` = `{s}`: {e}")),
            None => Ok(default),
        }
    }

    pub fn resolve_string(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.values.get(key).cloned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let c = Config::parse("# comment\nlambda = 0.2\n[run]\nx-start=-40\n").unwrap();
        assert_eq!(c.resolve(None::<f64>, "lambda", 0.1).unwrap(), 0.2);
        assert_eq!(c.resolve(Some(0.3), "lambda", 0.1).unwrap(), 0.3);
        assert_eq!(c.resolve(None::<f64>, "x-start", -5.0).unwrap(), -40.0);
        assert_eq!(c.resolve(None::<f64>, "dx", 0.02).unwrap(), 0.02);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Config::parse("what is this").is_err());
        assert!(Config::parse("lambda = abc")
            .unwrap()
            .resolve(None::<f64>, "lambda", 0.1)
            .is_err());
    }
}
