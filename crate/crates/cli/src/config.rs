//! Run parameters and the TOML config file they can be loaded from.
//!
//! A config holds top-level keys that apply to every command plus optional
//! `[command]` sections that override them for one command. Explicit flags
//! win over both.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Every tunable input. `None` means "use the command's default".
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Params {
    pub n: Option<usize>,
    pub k: Option<usize>,
    #[serde(rename = "R")]
    pub radius: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub eps_list: Option<Vec<f64>>,
    pub resolutions: Option<Vec<usize>>,
    pub depth: Option<usize>,
    pub tol: Option<f64>,
    pub l: Option<Vec<String>>,
    pub quick: bool,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

pub const COMMANDS: [&str; 9] = [
    "constants",
    "verify-hardy",
    "verify-weighted",
    "verify-ft",
    "sharpness",
    "eigen",
    "decompose",
    "identities",
    "all",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config {path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("config {path}: key `{key}`: {message}")]
    Value { path: PathBuf, key: String, message: String },
}

/// Parsed config: top-level keys and per-command sections.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub path: PathBuf,
    pub top: toml::Table,
    pub sections: BTreeMap<String, toml::Table>,
}

pub fn load_config(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

pub fn parse_config(text: &str, path: &Path) -> Result<ConfigFile, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError::Parse {
            path: path.to_path_buf(),
            line,
            message: e.message().to_string(),
        }
    })?;
    let mut cfg = ConfigFile {
        path: path.to_path_buf(),
        ..Default::default()
    };
    for (key, value) in table {
        match value {
            toml::Value::Table(t) => {
                cfg.sections.insert(key, t);
            }
            other => {
                cfg.top.insert(key, other);
            }
        }
    }
    Ok(cfg)
}

/// Fills every unset field of `params` from the config; returns warnings
/// for keys and sections that are not recognized.
pub fn merge_config(params: &mut Params, cfg: &ConfigFile, command: &str) -> Result<Vec<String>, ConfigError> {
    let mut warnings = Vec::new();
    for name in cfg.sections.keys() {
        if !COMMANDS.contains(&name.as_str()) {
            warnings.push(format!("unknown config section [{name}] ignored"));
        }
    }
    let mut merged = cfg.top.clone();
    if let Some(section) = cfg.sections.get(command) {
        for (k, v) in section {
            merged.insert(k.clone(), v.clone());
        }
    }
    let bad = |key: &str, message: &str| ConfigError::Value {
        path: cfg.path.clone(),
        key: key.to_string(),
        message: message.to_string(),
    };
    for (key, value) in &merged {
        match key.replace('_', "-").as_str() {
            "n" => set(&mut params.n, || as_usize(value).ok_or_else(|| bad(key, "expected a nonnegative integer")))?,
            "k" => set(&mut params.k, || as_usize(value).ok_or_else(|| bad(key, "expected a nonnegative integer")))?,
            "R" | "radius" => set(&mut params.radius, || as_f64(value).ok_or_else(|| bad(key, "expected a number")))?,
            "trials" => set(&mut params.trials, || {
                as_usize(value).ok_or_else(|| bad(key, "expected a nonnegative integer"))
            })?,
            "seed" => set(&mut params.seed, || {
                value
                    .as_integer()
                    .and_then(|v| u64::try_from(v).ok())
                    .ok_or_else(|| bad(key, "expected a nonnegative integer"))
            })?,
            "eps-list" => set(&mut params.eps_list, || {
                as_list(value, as_f64).ok_or_else(|| bad(key, "expected a list of numbers"))
            })?,
            "resolutions" => set(&mut params.resolutions, || {
                as_list(value, as_usize).ok_or_else(|| bad(key, "expected a list of integers"))
            })?,
            "depth" => set(&mut params.depth, || as_usize(value).ok_or_else(|| bad(key, "expected a nonnegative integer")))?,
            "tol" => set(&mut params.tol, || as_f64(value).ok_or_else(|| bad(key, "expected a number")))?,
            "l" => set(&mut params.l, || {
                as_list(value, |v| match v {
                    toml::Value::String(s) => Some(s.clone()),
                    toml::Value::Integer(i) => Some(i.to_string()),
                    toml::Value::Float(f) => Some(f.to_string()),
                    _ => None,
                })
                .ok_or_else(|| bad(key, "expected a list of half-integers"))
            })?,
            "quick" => {
                let q = value.as_bool().ok_or_else(|| bad(key, "expected a boolean"))?;
                params.quick |= q;
            }
            "format" => set(&mut params.format, || match value.as_str() {
                Some("json") => Ok(Format::Json),
                Some("csv") => Ok(Format::Csv),
                _ => Err(bad(key, "expected \"json\" or \"csv\"")),
            })?,
            "out" => set(&mut params.out, || {
                value
                    .as_str()
                    .map(PathBuf::from)
                    .ok_or_else(|| bad(key, "expected a path string"))
            })?,
            _ => warnings.push(format!("unknown config key `{key}` ignored")),
        }
    }
    Ok(warnings)
}

fn set<T>(slot: &mut Option<T>, value: impl FnOnce() -> Result<T, ConfigError>) -> Result<(), ConfigError> {
    if slot.is_none() {
        *slot = Some(value()?);
    }
    Ok(())
}

fn as_usize(v: &toml::Value) -> Option<usize> {
    v.as_integer().and_then(|i| usize::try_from(i).ok())
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_list<T>(v: &toml::Value, item: impl Fn(&toml::Value) -> Option<T>) -> Option<Vec<T>> {
    match v {
        toml::Value::Array(a) => a.iter().map(item).collect(),
        single => item(single).map(|x| vec![x]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ConfigFile {
        parse_config(text, Path::new("test.toml")).unwrap()
    }

    #[test]
    fn empty_file_changes_nothing() {
        let mut p = Params::default();
        let w = merge_config(&mut p, &cfg(""), "eigen").unwrap();
        assert!(w.is_empty());
        assert_eq!(p, Params::default());
    }

    #[test]
    fn flags_win_and_sections_override() {
        let c = cfg("tol = 1e-4\nseed = 3\n[sharpness]\ntol = 1e-2\neps-list = [0.2, 0.1, 0.05]\n");
        let mut p = Params {
            seed: Some(9),
            ..Default::default()
        };
        merge_config(&mut p, &c, "sharpness").unwrap();
        assert_eq!(p.seed, Some(9));
        assert_eq!(p.tol, Some(1e-2));
        assert_eq!(p.eps_list.as_deref(), Some(&[0.2, 0.1, 0.05][..]));
        let mut q = Params::default();
        merge_config(&mut q, &c, "eigen").unwrap();
        assert_eq!(q.tol, Some(1e-4));
    }

    #[test]
    fn unknown_keys_warn() {
        let mut p = Params::default();
        let w = merge_config(&mut p, &cfg("colour = \"red\"\n[plots]\nx = 1\n"), "eigen").unwrap();
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let err = parse_config("seed = 1\n\ntol = = 3\n", Path::new("c.toml")).unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        let mut p = Params::default();
        assert!(merge_config(&mut p, &cfg("trials = \"many\"\n"), "verify-hardy").is_err());
    }
}
