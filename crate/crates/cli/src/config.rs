//! `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are long flag
//! names; `_` and `-` are interchangeable. Values given on the command line
//! win over values from the file.

use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub entries: Vec<(String, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected key = value, got {line:?}", n + 1);
            };
            let key = k.trim().replace('_', "-");
            if key.is_empty() {
                bail!("line {}: empty key", n + 1);
            }
            if entries.iter().any(|(e, _)| *e == key) {
                bail!("line {}: duplicate key {key:?}", n + 1);
            }
            entries.push((key, v.trim().trim_matches('"').to_string()));
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    #[cfg(test)]
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}
