//! Run configuration: an optional TOML file overlaid by command-line flags.
//!
//! ```toml
//! [map]
//! name = "baker2d"
//! params = [0.0, 0.4, 0.0, 0.0]
//!
//! [run]
//! x0 = "random"        # or [1.0, 2.0]
//! m = "auto"           # or 1
//! n_steps = 100000
//! burn_in = 200
//! seed = 0
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};

use srbgrad::maps::{build_map, default_params, MapSystem};
use srbgrad::tangent::{benettin_le, detect_unstable_dim, DEFAULT_BURN_IN, DEFAULT_GAP_TOL};

/// A problem with the configuration itself (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

macro_rules! config_err {
    ($($t:tt)*) => { ConfigError(format!($($t)*)) };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartPoint {
    Named(String),
    Point(Vec<f64>),
}

impl FromStr for StartPoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "random" {
            return Ok(StartPoint::Named("random".into()));
        }
        parse_list(s).map(StartPoint::Point)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnstableDim {
    Count(usize),
    Named(String),
}

impl FromStr for UnstableDim {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "auto" => Ok(UnstableDim::Named("auto".into())),
            v => v
                .parse()
                .map(UnstableDim::Count)
                .map_err(|e| format!("{v:?}: {e}")),
        }
    }
}

/// Comma-separated list of values.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|e| format!("{v:?}: {e}")))
        .collect()
}

/// Flags shared by every subcommand. Each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML config file
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Registered map name
    #[arg(long)]
    pub map: Option<String>,
    /// Map parameters, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub params: Option<Vec<f64>>,
    /// Initial point, comma separated, or "random"
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<StartPoint>,
    /// Unstable dimension, or "auto" to take it from the Lyapunov spectrum
    #[arg(long)]
    pub m: Option<UnstableDim>,
    #[arg(long)]
    pub n_steps: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Second tangent seed (convergence)
    #[arg(long)]
    pub seed2: Option<u64>,
    /// Bins per dimension, comma separated
    #[arg(long, value_delimiter = ',')]
    pub bins: Option<Vec<usize>>,
    /// Registered observable (mc-integrate)
    #[arg(long)]
    pub observable: Option<String>,
    /// Independent trajectories, seeds seed, seed+1, ...
    #[arg(long)]
    pub trajectories: Option<u64>,
    /// Sample counts at which mc-integrate reports, comma separated
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<u64>>,
    /// Steps of the Lyapunov run behind m = "auto"
    #[arg(long)]
    pub le_steps: Option<u64>,
    /// Concurrent workers for ensembles
    #[arg(long, env = "SRB_GRAD_THREADS")]
    pub workers: Option<usize>,
    /// Output file; standard output if omitted
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Summary file (hyperbolicity)
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    map: MapSection,
    #[serde(default)]
    run: RunSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapSection {
    name: Option<String>,
    params: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    x0: Option<StartPoint>,
    m: Option<UnstableDim>,
    n_steps: Option<u64>,
    burn_in: Option<u64>,
    seed: Option<u64>,
    seed2: Option<u64>,
    bins: Option<Vec<usize>>,
    observable: Option<String>,
    trajectories: Option<u64>,
    sweep: Option<Vec<u64>>,
    le_steps: Option<u64>,
    workers: Option<usize>,
    output: Option<PathBuf>,
    summary: Option<PathBuf>,
}

fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| config_err!("{}: {e}", path.display()))
}

/// Per-subcommand defaults for fields the user left out.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub n_steps: u64,
    pub burn_in: u64,
    pub bins_per_dim: usize,
}

/// The fully resolved configuration, echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub map: String,
    pub params: Vec<f64>,
    pub x0: StartPoint,
    /// Initial point of the first trajectory.
    pub x0_resolved: Vec<f64>,
    pub m: UnstableDim,
    pub n_steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub seed2: u64,
    pub bins: Vec<usize>,
    pub observable: Option<String>,
    pub trajectories: u64,
    pub sweep: Vec<u64>,
    pub le_steps: u64,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub summary: Option<PathBuf>,
}

pub const DEFAULT_LE_STEPS: u64 = 10_000;

impl RunConfig {
    pub fn resolve(
        command: &'static str,
        flags: &Flags,
        defaults: Defaults,
    ) -> Result<(RunConfig, Box<dyn MapSystem>), ConfigError> {
        let file = match &flags.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let run = file.run;
        let name = flags
            .map
            .clone()
            .or(file.map.name)
            .ok_or_else(|| config_err!("no map given; pass --map or set [map] name"))?;
        let params = match flags.params.clone().or(file.map.params) {
            Some(p) => p,
            None => default_params(&name).unwrap_or_default(),
        };
        let map = build_map(&name, &params).map_err(|e| ConfigError(e.to_string()))?;
        let n = map.dim();

        let seed = flags.seed.or(run.seed).unwrap_or(0);
        let x0 = flags
            .x0
            .clone()
            .or(run.x0)
            .unwrap_or(StartPoint::Named("random".into()));
        let x0_resolved = start_point(&x0, map.as_ref(), seed)?;
        let n_steps = flags.n_steps.or(run.n_steps).unwrap_or(defaults.n_steps);
        if n_steps == 0 {
            return Err(config_err!("n_steps must be >= 1"));
        }
        let bins = flags
            .bins
            .clone()
            .or(run.bins)
            .unwrap_or_else(|| vec![defaults.bins_per_dim; n]);
        let trajectories = flags.trajectories.or(run.trajectories).unwrap_or(1);
        if trajectories == 0 {
            return Err(config_err!("trajectories must be >= 1"));
        }
        let m = flags
            .m
            .clone()
            .or(run.m)
            .unwrap_or(UnstableDim::Named("auto".into()));
        if let UnstableDim::Named(s) = &m {
            if s != "auto" {
                return Err(config_err!("m must be a count or \"auto\", got {s:?}"));
            }
        }
        let mut sweep = flags.sweep.clone().or(run.sweep).unwrap_or_default();
        sweep.sort_unstable();
        sweep.dedup();
        if sweep.iter().any(|&s| s == 0 || s > n_steps) {
            return Err(config_err!("sweep points must lie in 1..=n_steps"));
        }
        let cfg = RunConfig {
            command,
            map: name,
            params,
            x0,
            x0_resolved,
            m,
            n_steps,
            burn_in: flags.burn_in.or(run.burn_in).unwrap_or(defaults.burn_in),
            seed,
            seed2: flags.seed2.or(run.seed2).unwrap_or(seed.wrapping_add(1)),
            bins,
            observable: flags.observable.clone().or(run.observable),
            trajectories,
            sweep,
            le_steps: flags.le_steps.or(run.le_steps).unwrap_or(DEFAULT_LE_STEPS),
            workers: flags.workers.or(run.workers).unwrap_or(1).max(1),
            output: flags.output.clone().or(run.output),
            summary: flags.summary.clone().or(run.summary),
        };
        Ok((cfg, map))
    }

    /// Initial point of trajectory `i` of an ensemble.
    pub fn start_of(&self, map: &dyn MapSystem, i: u64) -> Result<Vec<f64>, ConfigError> {
        start_point(&self.x0, map, self.seed.wrapping_add(i))
    }

    /// Resolves `m = "auto"` from a Benettin run; the echoed value becomes
    /// the count.
    pub fn resolve_unstable_dim(&mut self, map: &dyn MapSystem) -> srbgrad::Result<usize> {
        let m = match self.m {
            UnstableDim::Count(m) => m,
            UnstableDim::Named(_) => {
                let le = benettin_le(
                    map,
                    &self.x0_resolved,
                    map.dim(),
                    self.le_steps,
                    DEFAULT_BURN_IN,
                    self.seed,
                )?;
                detect_unstable_dim(&le, DEFAULT_GAP_TOL)?
            }
        };
        if m == 0 || m > map.dim() {
            return Err(srbgrad::Error::InvalidArgument(format!(
                "m must lie in 1..={}, got {m}",
                map.dim()
            )));
        }
        self.m = UnstableDim::Count(m);
        Ok(m)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

fn start_point(x0: &StartPoint, map: &dyn MapSystem, seed: u64) -> Result<Vec<f64>, ConfigError> {
    match x0 {
        StartPoint::Named(s) if s == "random" => {
            Ok(srbgrad::rng::uniform_point(seed, map.domain()))
        }
        StartPoint::Named(s) => Err(config_err!("x0 must be a point or \"random\", got {s:?}")),
        StartPoint::Point(p) => {
            if p.len() != map.dim() {
                return Err(config_err!(
                    "x0 has {} coordinates, map '{}' has {}",
                    p.len(),
                    map.name(),
                    map.dim()
                ));
            }
            srbgrad::maps::Point::reduced(p.clone(), map.domain())
                .map(|p| p.into_inner())
                .map_err(|e| ConfigError(e.to_string()))
        }
    }
}
