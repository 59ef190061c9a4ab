//! Flat key = value run configuration for the verification driver.
//!
//! Every key has a default, so the empty file is a valid configuration;
//! unknown keys and malformed values are rejected with the offending key
//! named. All science parameters live here (or in CLI flags that override
//! them) — environment variables only ever control the worker thread count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::functionals::NormSpec;
use crate::geometry::{derive_params, reach_factor, WhitneyParams};
use crate::grid::GridSpec;

/// The seven verification suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Geometry,
    Functionals,
    Coincidence,
    Factorization,
    Multiplication,
    Measures,
    Duality,
}

pub const ALL_SUITES: [Suite; 7] = [
    Suite::Geometry,
    Suite::Functionals,
    Suite::Coincidence,
    Suite::Factorization,
    Suite::Multiplication,
    Suite::Measures,
    Suite::Duality,
];

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Functionals => "functionals",
            Suite::Coincidence => "coincidence",
            Suite::Factorization => "factorization",
            Suite::Multiplication => "multiplication",
            Suite::Measures => "measures",
            Suite::Duality => "duality",
        }
    }

    /// Default tolerance of the suite's tolerance-bearing checks: anchor
    /// agreement for functionals, stability margins for the constant-bearing
    /// suites, discretization slack for geometry and measures.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Suite::Geometry => 1e-12,
            Suite::Functionals => 0.03,
            Suite::Coincidence => 0.20,
            Suite::Factorization => 0.20,
            Suite::Multiplication => 0.20,
            Suite::Measures => 0.05,
            Suite::Duality => 0.20,
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        ALL_SUITES
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

/// A parsed and validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub whitney: WhitneyParams,
    pub specs: Vec<NormSpec>,
    /// Enabled suites in canonical order, deduplicated.
    pub suites: Vec<Suite>,
    pub trials: u64,
    pub seed: u64,
    /// Per-suite tolerance overrides (keyed by suite name).
    pub tolerances: BTreeMap<String, f64>,
    /// Output stem; `verify` writes `<output>.csv` and `<output>.json`.
    pub output: PathBuf,
}

pub const DEFAULT_SPECS: &str = "2:2:2:0;2:2:2:-0.5;4:2:2:-1;inf:2:2:0;2:inf:2:0;inf:inf:inf:0";

impl RunConfig {
    /// The all-defaults configuration (the empty file).
    pub fn default_config() -> RunConfig {
        parse_config("").expect("default configuration must validate")
    }

    /// Tolerance for a suite: configured override or the suite default.
    pub fn tolerance(&self, suite: Suite) -> f64 {
        self.tolerances
            .get(suite.name())
            .copied()
            .unwrap_or_else(|| suite.default_tolerance())
    }

    pub fn validate(&self) -> Result<()> {
        if self.suites.is_empty() {
            return Err(Error::Config("suites: at least one suite required".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials: must be at least 1".into()));
        }
        for (k, &v) in &self.tolerances {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "tolerance.{k}: must be positive and finite, got {v}"
                )));
            }
        }
        // Every configured aperture and the Whitney reach must stay clear of
        // the torus wrap on this grid.
        let d = derive_params(&self.whitney)?;
        self.grid.check_torus_safety(reach_factor(&d))?;
        for s in &self.specs {
            self.grid.check_torus_safety(s.aperture)?;
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Config(format!("key `{key}`: bad value `{}`", raw.trim())))
}

/// Parses the flat key = value format. `#` starts a comment (whole line or
/// trailing); every key is optional; unknown keys are errors.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut n: usize = 1;
    let mut ny: usize = 256;
    let mut t_levels: usize = 64;
    let mut t_min: f64 = 2f64.powi(-8);
    let mut t_max: f64 = 2f64.powi(-3);
    let mut alpha1: f64 = 0.25;
    let mut alpha2: f64 = 2.0;
    let mut specs_raw: String = DEFAULT_SPECS.to_string();
    let mut suites_raw: String = "all".to_string();
    let mut trials: u64 = 100_000;
    let mut seed: u64 = 7;
    let mut output = PathBuf::from("target/verify-report");
    let mut tolerances: BTreeMap<String, f64> = BTreeMap::new();

    for (i, full_line) in text.lines().enumerate() {
        let line = full_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`, got `{line}`",
                i + 1
            )));
        };
        let key = key.trim();
        match key {
            "n" => n = parse_value(key, value)?,
            "ny" => ny = parse_value(key, value)?,
            "t_levels" => t_levels = parse_value(key, value)?,
            "t_min" => t_min = parse_value(key, value)?,
            "t_max" => t_max = parse_value(key, value)?,
            "alpha1" => alpha1 = parse_value(key, value)?,
            "alpha2" => alpha2 = parse_value(key, value)?,
            "specs" => specs_raw = value.trim().to_string(),
            "suites" => suites_raw = value.trim().to_string(),
            "trials" => trials = parse_value(key, value)?,
            "seed" => seed = parse_value(key, value)?,
            "output" => output = PathBuf::from(value.trim()),
            _ if key.starts_with("tolerance.") => {
                let suite: Suite = key["tolerance.".len()..].parse()?;
                let v: f64 = parse_value(key, value)?;
                tolerances.insert(suite.name().to_string(), v);
            }
            _ => {
                return Err(Error::Config(format!(
                    "line {}: unknown key `{key}`",
                    i + 1
                )))
            }
        }
    }

    let grid = GridSpec::new(n, ny, t_levels, t_min, t_max)?;
    let whitney = WhitneyParams::new(alpha1, alpha2)?;

    let mut specs = Vec::new();
    for part in specs_raw.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let mut s: NormSpec = part.parse()?;
        s.whitney = whitney;
        specs.push(s);
    }
    if specs.is_empty() {
        return Err(Error::Config("specs: at least one norm spec required".into()));
    }

    let suites = parse_suite_list(&suites_raw)?;

    let cfg = RunConfig {
        grid,
        whitney,
        specs,
        suites,
        trials,
        seed,
        tolerances,
        output,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Comma-separated suite names, or the literal `all`; results come back in
/// canonical order with duplicates collapsed.
pub fn parse_suite_list(raw: &str) -> Result<Vec<Suite>> {
    if raw.trim() == "all" {
        return Ok(ALL_SUITES.to_vec());
    }
    let mut wanted = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        wanted.push(part.parse::<Suite>()?);
    }
    Ok(ALL_SUITES
        .into_iter()
        .filter(|s| wanted.contains(s))
        .collect())
}

pub fn read_config_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
