//! Flat `key = value` config files for `pscnn train`.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

/// Keys accepted in a config file. Dashes and underscores are interchangeable.
pub const KNOWN_KEYS: &[&str] = &[
    "data",
    "out",
    "modules",
    "transform",
    "bits",
    "step",
    "schedule",
    "epochs",
    "init",
    "seed",
    "jobs",
    "combiner",
    "max-modules",
    "target-acc",
    "min-gain",
    "trim",
    "holdout",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {line_no}: expected `key = value`"))?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("line {line_no}: unknown key `{key}`"));
            }
            if values.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
                return Err(format!("line {line_no}: duplicate key `{key}`"));
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, String>
    where
        T: FromStr,
        T::Err: Display,
    {
        debug_assert!(KNOWN_KEYS.contains(&key));
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| format!("line {line}: invalid value `{v}` for `{key}`: {e}")),
        }
    }
}
