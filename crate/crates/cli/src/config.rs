//! `key = value` experiment configuration with a version header.
//!
//! ```text
//! minkcap-config 1
//! experiment = main_band
//! seed = 7
//! m = 1..4
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

pub const HEADER: &str = "minkcap-config";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing version header `{HEADER} {VERSION}`")]
    MissingHeader,
    #[error("unsupported config version {0}")]
    Version(u32),
    #[error("key `{key}`: cannot parse `{value}`: {msg}")]
    Value { key: String, value: String, msg: String },
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("missing required key `{0}`")]
    Missing(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    FpCapRatio,
    MainBand,
    CapCompare,
    PzDiag,
    SrwBand,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::FpCapRatio,
        ExperimentKind::MainBand,
        ExperimentKind::CapCompare,
        ExperimentKind::PzDiag,
        ExperimentKind::SrwBand,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::FpCapRatio => "fp_cap_ratio",
            ExperimentKind::MainBand => "main_band",
            ExperimentKind::CapCompare => "cap_compare",
            ExperimentKind::PzDiag => "pz_diag",
            ExperimentKind::SrwBand => "srw_band",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::UnknownExperiment(s.to_string()))
    }
}

/// Ordered key/value map; typed accessors parse on demand.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::new();
        let mut seen_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if !seen_header {
                let mut parts = line.split_whitespace();
                if parts.next() != Some(HEADER) {
                    return Err(ConfigError::MissingHeader);
                }
                let v: u32 = parts
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or(ConfigError::MissingHeader)?;
                if v != VERSION {
                    return Err(ConfigError::Version(v));
                }
                seen_header = true;
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: "empty key".into(),
                });
            }
            cfg.entries.insert(k.to_string(), v.trim().to_string());
        }
        if !seen_header {
            return Err(ConfigError::MissingHeader);
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{HEADER} {VERSION}\n");
        for (k, v) in &self.entries {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            msg: format!("override `{kv}` is not key=value"),
        })?;
        self.set(k.trim(), v.trim());
        Ok(())
    }

    /// Copies every entry of `other` over this config.
    pub fn merge(&mut self, other: &ExperimentConfig) -> &mut Self {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
        self
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| ConfigError::Value {
                key: key.into(),
                value: v.clone(),
                msg: e.to_string(),
            }),
        }
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.entries.get(key).map(|s| s.to_ascii_lowercase()) {
            None => Ok(default),
            Some(v) => match v.as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(ConfigError::Value {
                    key: key.into(),
                    value: v,
                    msg: "expected a boolean".into(),
                }),
            },
        }
    }

    /// Comma-separated list; `a..b` expands an inclusive integer range.
    pub fn get_list<T>(&self, key: &str, default: &[T]) -> Result<Vec<T>, ConfigError>
    where
        T: FromStr + Clone,
        T::Err: std::fmt::Display,
    {
        let Some(v) = self.entries.get(key) else {
            return Ok(default.to_vec());
        };
        let bad = |msg: String| ConfigError::Value {
            key: key.into(),
            value: v.clone(),
            msg,
        };
        let mut out = Vec::new();
        for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some((a, b)) = item.split_once("..") {
                let a: i64 = a
                    .trim()
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
                let b: i64 = b
                    .trim()
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
                for i in a..=b {
                    out.push(i.to_string().parse().map_err(|e: T::Err| bad(e.to_string()))?);
                }
            } else {
                out.push(item.parse().map_err(|e: T::Err| bad(e.to_string()))?);
            }
        }
        Ok(out)
    }

    pub fn experiment(&self) -> Result<ExperimentKind, ConfigError> {
        self.get_str("experiment")
            .ok_or_else(|| ConfigError::Missing("experiment".into()))?
            .parse()
    }
}
