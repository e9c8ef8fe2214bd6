//! JSON config files. Keys mirror the long flag names with `_` for `-`;
//! a flag given on the command line wins over the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

/// Accepts `1.5`, `"inf"` or `"1.5"`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Value(f64),
    Text(String),
}

impl Number {
    pub fn get(&self) -> Result<f64> {
        match self {
            Number::Value(v) => Ok(*v),
            Number::Text(s) => s.parse().with_context(|| format!("'{s}' is not a number")),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub ops: Option<PathBuf>,
    pub save: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub label_col: Option<String>,
    pub kind: Option<String>,
    pub trees: Option<usize>,
    pub max_depth: Option<usize>,
    pub lifetime: Option<Number>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub phi: Option<f64>,
    pub dim: Option<usize>,
    pub shingle: Option<usize>,
    pub scale_minmax: Option<String>,
    pub score_by: Option<String>,
    pub name: Option<String>,
    pub n_inliers: Option<usize>,
    pub n_outliers: Option<usize>,
    pub bounds: Option<String>,
    pub resolution: Option<usize>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn lifetime(&self) -> Result<Option<f64>> {
        self.lifetime.as_ref().map(Number::get).transpose()
    }
}

/// Flag value, else config value, else an error naming the flag.
pub fn required<T>(flag: Option<T>, config: Option<T>, name: &str) -> Result<T> {
    match flag.or(config) {
        Some(v) => Ok(v),
        None => bail!("missing --{name} (flag or config key '{}')", name.replace('-', "_")),
    }
}
