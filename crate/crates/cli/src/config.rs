//! Flat key=value configuration files. Flags always override file values,
//! which override the built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;

use crate::Failure;

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::Contract(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Failure::Contract(format!(
                    "config line {} is not key=value: {raw:?}",
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Failure> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Failure::Contract(format!("config key {key} has unparsable value {raw:?}"))
            }),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, Failure> {
        self.parsed(key)
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, Failure> {
        self.parsed(key)
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, Failure> {
        self.parsed(key)
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.values.get(key).cloned()
    }
}

/// flag > config file > default.
pub fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
