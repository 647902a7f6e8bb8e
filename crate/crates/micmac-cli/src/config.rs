//! Plain `key = value` run-config files with `[section]` headers.
//!
//! The config supplies defaults for command-line flags; flags always win.
//! Unknown sections or keys are rejected so typos cannot silently fall back
//! to defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Known `section.key` pairs; anything else is a usage error.
const KNOWN_KEYS: &[(&str, &str)] = &[
    ("synth", "out"),
    ("synth", "subjects"),
    ("synth", "samples"),
    ("synth", "features"),
    ("synth", "informative"),
    ("synth", "effect"),
    ("synth", "subject_std"),
    ("synth", "copies"),
    ("synth", "rho"),
    ("synth", "seed"),
    ("crossval", "data"),
    ("crossval", "schemes"),
    ("crossval", "repeats"),
    ("crossval", "outer"),
    ("crossval", "inner"),
    ("crossval", "seed"),
    ("crossval", "k_max"),
    ("crossval", "out"),
    ("selector", "threshold"),
    ("selector", "epsilon"),
    ("selector", "max_selected"),
    ("selector", "preselect_n"),
    ("select", "data"),
    ("select", "wrapper"),
    ("select", "seed"),
    ("select", "outer"),
    ("select", "inner"),
    ("select", "out"),
    ("compare", "out"),
    ("report", "out"),
];

#[derive(Debug, Default, Clone)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Config> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if name.is_empty() {
                    bail!("line {}: empty section header", i + 1);
                }
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`, got {raw:?}", i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if current.is_empty() {
                bail!("line {}: key {key:?} appears before any [section] header", i + 1);
            }
            if !KNOWN_KEYS.contains(&(current.as_str(), key)) {
                bail!("line {}: unknown config key [{current}] {key}", i + 1);
            }
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.to_string(), value.to_string());
        }
        Ok(Config { sections })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    /// Typed lookup; a present-but-unparsable value is an error.
    pub fn get_parsed<T>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key [{section}] {key} = {v:?}: {e}")),
        }
    }
}

/// Renders resolved parameters back into config syntax, so the file written
/// into an output directory reproduces the run on its own.
pub fn render(sections: &[(&str, Vec<(String, String)>)]) -> String {
    let mut out = String::new();
    for (name, keys) in sections {
        let _ = writeln!(out, "[{name}]");
        for (k, v) in keys {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out);
    }
    out
}
