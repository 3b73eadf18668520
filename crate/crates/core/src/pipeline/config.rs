use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::benford::Signal;
use crate::dataset::{parse_periods, Period};
use crate::error::{Error, Result};

/// Keys accepted in config files and as `--key value` overrides.
pub const CONFIG_KEYS: [&str; 17] = [
    "profiles",
    "cases",
    "name_col",
    "k",
    "k_max",
    "seed",
    "periods",
    "min_total",
    "signal",
    "horizon",
    "holdout",
    "level",
    "period",
    "corr_threshold",
    "param_table",
    "capital_override",
    "out",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub profiles: PathBuf,
    pub cases: PathBuf,
    pub name_col: String,
    /// Fixed cluster count, or `None` to pick it from the elbow curve.
    pub k: Option<usize>,
    /// Largest k tried when choosing automatically.
    pub k_max: usize,
    pub seed: u64,
    /// Audit periods; empty means one period spanning each series.
    pub periods: Vec<Period>,
    pub min_total: u64,
    pub signal: Signal,
    pub horizon: usize,
    pub holdout: usize,
    pub level: f64,
    /// Seasonal period of every fitted model.
    pub period: usize,
    pub corr_threshold: f64,
    /// Replaces the default cluster-to-order table.
    pub param_table: Option<PathBuf>,
    /// County fitted with (1,1,1)(0,1,1)[s] regardless of its cluster.
    pub capital_override: Option<String>,
    /// Not recorded in the manifest, so runs into different directories
    /// stay comparable.
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(profiles: impl Into<PathBuf>, cases: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            profiles: profiles.into(),
            cases: cases.into(),
            name_col: "county".into(),
            k: None,
            k_max: 10,
            seed: 0,
            periods: Vec::new(),
            min_total: 5000,
            signal: Signal::Cumulative,
            horizon: 20,
            holdout: 20,
            level: 0.95,
            period: 7,
            corr_threshold: 0.9,
            param_table: None,
            capital_override: None,
            out: out.into(),
        }
    }

    /// Splits a flat `key = value` file into pairs. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    /// Builds a config from key-value pairs, later pairs overriding earlier
    /// ones. `env_seed` is used only when no `seed` key is present.
    pub fn from_pairs(pairs: &[(String, String)], env_seed: Option<&str>) -> Result<Self> {
        let mut cfg = Self::new("", "", "");
        let mut seen_seed = false;
        let mut required = [false; 3];
        for (raw_key, value) in pairs {
            let key = raw_key.replace('-', "_");
            let bad = |what: &str| Error::Config(format!("`{key}`: {what} (got `{value}`)"));
            let int = || {
                value
                    .parse::<usize>()
                    .map_err(|_| bad("expected a non-negative integer"))
            };
            let optional = || (!value.is_empty() && value != "none").then(|| value.clone());
            match key.as_str() {
                "profiles" => {
                    cfg.profiles = value.into();
                    required[0] = true;
                }
                "cases" => {
                    cfg.cases = value.into();
                    required[1] = true;
                }
                "out" => {
                    cfg.out = value.into();
                    required[2] = true;
                }
                "name_col" => cfg.name_col = value.clone(),
                "k" => cfg.k = if value == "auto" { None } else { Some(int()?) },
                "k_max" => cfg.k_max = int()?,
                "seed" => {
                    cfg.seed = value.parse().map_err(|_| bad("expected an unsigned integer"))?;
                    seen_seed = true;
                }
                "periods" => {
                    cfg.periods = if value.is_empty() {
                        Vec::new()
                    } else {
                        parse_periods(value).map_err(|e| bad(&e.to_string()))?
                    }
                }
                "min_total" => {
                    cfg.min_total = value.parse().map_err(|_| bad("expected an unsigned integer"))?
                }
                "signal" => cfg.signal = value.parse().map_err(|e: Error| bad(&e.to_string()))?,
                "horizon" => cfg.horizon = int()?,
                "holdout" => cfg.holdout = int()?,
                "level" => cfg.level = value.parse().map_err(|_| bad("expected a number"))?,
                "period" => cfg.period = int()?,
                "corr_threshold" => {
                    cfg.corr_threshold = value.parse().map_err(|_| bad("expected a number"))?
                }
                "param_table" => cfg.param_table = optional().map(PathBuf::from),
                "capital_override" => cfg.capital_override = optional(),
                _ => return Err(Error::Config(format!("unknown key `{raw_key}`"))),
            }
        }
        if !seen_seed {
            if let Some(s) = env_seed {
                cfg.seed = s.trim().parse().map_err(|_| {
                    Error::Config(format!("EPISIGNAL_SEED is not an unsigned integer: `{s}`"))
                })?;
            }
        }
        for (name, ok) in ["profiles", "cases", "out"].iter().zip(required) {
            if !ok {
                return Err(Error::Config(format!("missing required key `{name}`")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` and applies `overrides` on top.
    pub fn load(
        path: impl AsRef<Path>,
        overrides: &[(String, String)],
        env_seed: Option<&str>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Self::parse_pairs(&text)?;
        pairs.extend_from_slice(overrides);
        Self::from_pairs(&pairs, env_seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level {} is not in (0, 1)", self.level)));
        }
        if self.k == Some(0) || self.k_max < 2 {
            return Err(Error::Config(
                "cluster counts must be at least 1 (k_max at least 2)".into(),
            ));
        }
        if self.period == 0 {
            return Err(Error::Config("period must be at least 1".into()));
        }
        if !(self.corr_threshold > 0.0 && self.corr_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "corr_threshold {} is not in (0, 1]",
                self.corr_threshold
            )));
        }
        Ok(())
    }
}
