//! Line-oriented `key = value` settings files.
//!
//! Keys are the long flag names without dashes (`theta1`, `max-elements`, ...).
//! Blank lines and lines starting with `#` are ignored. Values given on the
//! command line take precedence over the file.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const KEYS: [&str; 11] = [
    "problem",
    "projection",
    "theta1",
    "theta2",
    "vartheta",
    "thetas",
    "marking",
    "mode",
    "max-elements",
    "out",
    "dump-mesh",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, (usize, String)>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`, found `{line}`", i + 1);
            };
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key `{key}`", i + 1);
            }
            let value = value.trim().to_string();
            if values.insert(key.clone(), (i + 1, value)).is_some() {
                bail!("line {}: key `{key}` given twice", i + 1);
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    /// Parses the value stored under `key`, if any.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config line {line}: bad value for `{key}`: {e}")),
        }
    }
}
