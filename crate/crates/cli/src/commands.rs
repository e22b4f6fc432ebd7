//! The subcommands. Each resolves its config, runs, and writes a
//! self-describing CSV or JSON file.

use std::io::{self, Write};

use serde_json::{json, Value};

use srbgrad::curvature::{
    binned_g_1d_into, convergence_diagnostic, run_algorithm1, GradientSeries1D,
};
use srbgrad::hyperbolicity::{stable_unstable_angles, AngleSeries, PDF_BINS};
use srbgrad::maps::MapSystem;
use srbgrad::measure::{
    build_observable, histogram_srb, mc_integrate_pair_with, MCEstimate, PairStats,
};
use srbgrad::parallel::ordered_map;
use srbgrad::tangent::{benettin_le, detect_unstable_dim, LeSpectrum, DEFAULT_GAP_TOL};

use crate::config::{ConfigError, Defaults, Flags, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(srbgrad::Error),
    Io(io::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<srbgrad::Error> for CliError {
    fn from(e: srbgrad::Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(e) => match e.root() {
                srbgrad::Error::InvalidArgument(_) | srbgrad::Error::DimensionMismatch(_) => 2,
                _ => 3,
            },
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Numerical(e) => match e.step() {
                Some(step) => write!(f, "numerical failure at step {step}: {}", e.root()),
                None => write!(f, "numerical failure: {e}"),
            },
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

pub type CliResult = Result<(), CliError>;

/// 17 significant digits, round-trip exact. Negative zero prints as zero.
pub fn f17(v: f64) -> String {
    format!("{:.16e}", v + 0.0)
}

fn open_output(cfg: &RunConfig) -> io::Result<Box<dyn Write>> {
    Ok(match &cfg.output {
        Some(p) if p.as_os_str() != "-" => Box::new(io::BufWriter::new(std::fs::File::create(p)?)),
        _ => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn csv_header(out: &mut dyn Write, cfg: &RunConfig) -> io::Result<()> {
    writeln!(out, "# srbgrad {}", cfg.command)?;
    writeln!(out, "# config = {}", cfg.to_json())
}

fn write_json(out: &mut dyn Write, v: &Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)
}

fn estimate_json(e: &MCEstimate) -> Value {
    json!({ "value": e.value, "std_error": e.std_error, "n": e.n_samples })
}

/// Runs one task per trajectory on the configured workers; the first error
/// in trajectory order wins.
fn ensemble<R, F>(cfg: &RunConfig, map: &dyn MapSystem, f: F) -> Result<Vec<R>, CliError>
where
    R: Send,
    F: Fn(u64, &[f64]) -> srbgrad::Result<R> + Sync,
{
    let starts = (0..cfg.trajectories)
        .map(|i| cfg.start_of(map, i).map(|x| (i, x)))
        .collect::<Result<Vec<_>, _>>()?;
    ordered_map(&starts, cfg.workers, |(i, x)| f(*i, x))
        .into_iter()
        .map(|r| r.map_err(CliError::from))
        .collect()
}

fn single(cfg: &RunConfig) -> CliResult {
    if cfg.trajectories != 1 {
        return Err(ConfigError(format!(
            "{} runs a single trajectory; trajectories must be 1",
            cfg.command
        ))
        .into());
    }
    Ok(())
}

pub fn le(flags: &Flags) -> CliResult {
    let (cfg, map) = RunConfig::resolve(
        "le",
        flags,
        Defaults {
            n_steps: 100_000,
            burn_in: 200,
            bins_per_dim: 1,
        },
    )?;
    single(&cfg)?;
    let spectrum = benettin_le(
        map.as_ref(),
        &cfg.x0_resolved,
        map.dim(),
        cfg.n_steps,
        cfg.burn_in,
        cfg.seed,
    )?;
    let unstable_dim = detect_unstable_dim(&spectrum, DEFAULT_GAP_TOL).ok();
    let mut out = open_output(&cfg)?;
    write_json(
        &mut out,
        &json!({
            "config": cfg.to_json(),
            "map": cfg.map,
            "params": cfg.params,
            "t": spectrum.trajectory_length,
            "burn_in": spectrum.burn_in,
            "exponents": spectrum.exponents,
            "unstable_dim": unstable_dim,
        }),
    )?;
    out.flush()?;
    Ok(())
}

pub fn density_gradient(flags: &Flags) -> CliResult {
    let (mut cfg, map) = RunConfig::resolve(
        "density-gradient",
        flags,
        Defaults {
            n_steps: 10_000,
            burn_in: 200,
            bins_per_dim: 1,
        },
    )?;
    single(&cfg)?;
    let m = cfg.resolve_unstable_dim(map.as_ref())?;
    let n = map.dim();
    let mut out = open_output(&cfg)?;
    csv_header(&mut out, &cfg)?;
    let cols: Vec<String> = std::iter::once("step".to_string())
        .chain((1..=n).map(|i| format!("x{i}")))
        .chain((1..=m).map(|i| format!("g{i}")))
        .collect();
    writeln!(out, "{}", cols.join(","))?;
    let mut line = String::new();
    for sample in run_algorithm1(
        map.as_ref(),
        &cfg.x0_resolved,
        m,
        cfg.n_steps,
        cfg.burn_in,
        cfg.seed,
    )? {
        let sample = sample?;
        line.clear();
        line.push_str(&sample.step.to_string());
        for v in sample.point.iter().chain(&sample.g) {
            line.push(',');
            line.push_str(&f17(*v));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn convergence(flags: &Flags) -> CliResult {
    let (mut cfg, map) = RunConfig::resolve(
        "convergence",
        flags,
        Defaults {
            n_steps: 100,
            burn_in: 0,
            bins_per_dim: 1,
        },
    )?;
    single(&cfg)?;
    cfg.burn_in = 0;
    let m = cfg.resolve_unstable_dim(map.as_ref())?;
    let series = convergence_diagnostic(
        map.as_ref(),
        &cfg.x0_resolved,
        m,
        cfg.n_steps,
        cfg.seed,
        cfg.seed2,
    )?;
    let mut out = open_output(&cfg)?;
    csv_header(&mut out, &cfg)?;
    writeln!(out, "k,norm")?;
    for (k, norm) in series {
        writeln!(out, "{k},{}", f17(norm))?;
    }
    out.flush()?;
    Ok(())
}

fn default_observable(dim: usize) -> &'static str {
    match dim {
        2 => "sin_exp_2d",
        3 => "sin_sin_lin_3d",
        _ => "const_one",
    }
}

pub fn mc_integrate(flags: &Flags) -> CliResult {
    let (mut cfg, map) = RunConfig::resolve(
        "mc-integrate",
        flags,
        Defaults {
            n_steps: 1_000_000,
            burn_in: 200,
            bins_per_dim: 1,
        },
    )?;
    let name = cfg
        .observable
        .get_or_insert_with(|| default_observable(map.dim()).to_string())
        .clone();
    let v = build_observable(&name, map.domain()).map_err(|e| ConfigError(e.to_string()))?;
    if v.dim() != map.dim() {
        return Err(ConfigError(format!(
            "observable '{name}' is {}-dimensional, map '{}' is {}-dimensional",
            v.dim(),
            cfg.map,
            map.dim()
        ))
        .into());
    }
    let m = cfg.resolve_unstable_dim(map.as_ref())?;
    let sweep = if cfg.sweep.is_empty() {
        vec![cfg.n_steps]
    } else {
        cfg.sweep.clone()
    };
    let per_trajectory = ensemble(&cfg, map.as_ref(), |i, x0| {
        let mut snaps = Vec::with_capacity(sweep.len());
        let mut next = 0;
        mc_integrate_pair_with(
            map.as_ref(),
            v.as_ref(),
            x0,
            m,
            cfg.n_steps,
            cfg.burn_in,
            cfg.seed.wrapping_add(i),
            |k, s| {
                if next < sweep.len() && sweep[next] == k {
                    snaps.push(*s);
                    next += 1;
                }
            },
        )?;
        Ok(snaps)
    })?;
    let pooled: Vec<PairStats> = (0..sweep.len())
        .map(|j| {
            let mut acc = per_trajectory[0][j];
            for t in &per_trajectory[1..] {
                acc.merge(&t[j]);
            }
            acc
        })
        .collect();
    let mut out = open_output(&cfg)?;
    let record = |n: u64, s: &PairStats| {
        let r = s.result();
        json!({
            "n_per_trajectory": n,
            "lhs": estimate_json(&r.lhs),
            "rhs": estimate_json(&r.rhs),
            "g_l2_norm": r.g_l2_norm,
        })
    };
    if cfg.sweep.is_empty() {
        let mut v = record(cfg.n_steps, &pooled[0]);
        v["config"] = cfg.to_json();
        write_json(&mut out, &v)?;
    } else {
        for (n, s) in sweep.iter().zip(&pooled) {
            let mut v = record(*n, s);
            v["config"] = cfg.to_json();
            writeln!(out, "{v}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn histogram(flags: &Flags) -> CliResult {
    let (cfg, map) = RunConfig::resolve(
        "histogram",
        flags,
        Defaults {
            n_steps: 1_000_000,
            burn_in: 200,
            bins_per_dim: 256,
        },
    )?;
    let parts = ensemble(&cfg, map.as_ref(), |_, x0| {
        histogram_srb(map.as_ref(), x0, cfg.n_steps, &cfg.bins, cfg.burn_in)
    })?;
    let mut iter = parts.into_iter();
    let mut hist = iter.next().expect("at least one trajectory");
    for h in iter {
        hist.merge(&h)?;
    }
    let mut out = open_output(&cfg)?;
    csv_header(&mut out, &cfg)?;
    let bins: Vec<String> = hist.bins.iter().map(|b| b.to_string()).collect();
    let domain: Vec<String> = hist
        .domain
        .iter()
        .map(|iv| format!("{},{}", f17(iv.lo), f17(iv.hi)))
        .collect();
    writeln!(
        out,
        "dims={} bins={} domain={} total={}",
        hist.dims(),
        bins.join("x"),
        domain.join(";"),
        hist.total
    )?;
    let mut line = String::new();
    for row in hist.counts.chunks(hist.bins[0]) {
        line.clear();
        for (i, c) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&c.to_string());
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn pool_angles(parts: Vec<AngleSeries>) -> AngleSeries {
    let steps: u64 = parts.iter().map(|p| p.le_spectrum.trajectory_length).sum();
    let mut exponents = vec![0.0; parts[0].le_spectrum.exponents.len()];
    for p in &parts {
        let w = p.le_spectrum.trajectory_length as f64 / steps as f64;
        for (e, x) in exponents.iter_mut().zip(&p.le_spectrum.exponents) {
            *e += w * x;
        }
    }
    let le = LeSpectrum {
        exponents,
        trajectory_length: steps,
        burn_in: parts[0].le_spectrum.burn_in,
    };
    AngleSeries::from_samples(parts.into_iter().flat_map(|p| p.samples).collect(), le)
}

pub fn hyperbolicity(flags: &Flags) -> CliResult {
    let (mut cfg, map) = RunConfig::resolve(
        "hyperbolicity",
        flags,
        Defaults {
            n_steps: 100_000,
            burn_in: 200,
            bins_per_dim: 1,
        },
    )?;
    let mu = cfg.resolve_unstable_dim(map.as_ref())?;
    let parts = ensemble(&cfg, map.as_ref(), |i, x0| {
        stable_unstable_angles(
            map.as_ref(),
            x0,
            mu,
            cfg.n_steps,
            cfg.burn_in,
            cfg.seed.wrapping_add(i),
        )
    })?;
    let angles = pool_angles(parts);
    let summary = json!({
        "config": cfg.to_json(),
        "min_d": angles.min_d,
        "frac_below_0.9": angles.fraction_below(0.9),
        "le_spectrum": angles.le_spectrum,
    });
    let mut out = open_output(&cfg)?;
    csv_header(&mut out, &cfg)?;
    writeln!(out, "bin_center,pdf_value")?;
    for i in 0..PDF_BINS {
        writeln!(
            out,
            "{},{}",
            f17(AngleSeries::bin_center(i)),
            f17(angles.pdf[i])
        )?;
    }
    let summary_path = cfg.summary.clone().or_else(|| {
        cfg.output
            .as_ref()
            .filter(|p| p.as_os_str() != "-")
            .map(|p| p.with_extension("json"))
    });
    match summary_path {
        Some(p) => {
            let mut f = io::BufWriter::new(std::fs::File::create(p)?);
            write_json(&mut f, &summary)?;
            f.flush()?;
        }
        None => writeln!(out, "# summary = {summary}")?,
    }
    out.flush()?;
    Ok(())
}

pub fn appendix_1d(flags: &Flags) -> CliResult {
    let (cfg, map) = RunConfig::resolve(
        "appendix-1d",
        flags,
        Defaults {
            n_steps: 1_000_000,
            burn_in: 200,
            bins_per_dim: 2048,
        },
    )?;
    if map.dim() != 1 {
        return Err(ConfigError(format!(
            "appendix-1d needs a one-dimensional map, '{}' is {}-dimensional",
            cfg.map,
            map.dim()
        ))
        .into());
    }
    if cfg.bins.len() != 1 {
        return Err(ConfigError("appendix-1d takes a single bin count".into()).into());
    }
    let k = cfg.bins[0];
    let parts = ensemble(&cfg, map.as_ref(), |_, x0| {
        let mut series = GradientSeries1D::new(k);
        binned_g_1d_into(
            map.as_ref(),
            x0[0],
            cfg.n_steps,
            cfg.burn_in,
            &mut series,
            |_, _| {},
        )?;
        Ok(series)
    })?;
    let mut iter = parts.into_iter();
    let mut series = iter.next().expect("at least one trajectory");
    for s in iter {
        series.merge(&s);
    }
    let mut out = open_output(&cfg)?;
    csv_header(&mut out, &cfg)?;
    writeln!(out, "# skipped = {}", series.skipped)?;
    writeln!(out, "bin_center,g_avg,count")?;
    for i in 0..series.bins() {
        let avg = series.average(i).map_or_else(|| "nan".to_string(), f17);
        writeln!(
            out,
            "{},{},{}",
            f17(series.bin_center(i)),
            avg,
            series.counts[i]
        )?;
    }
    out.flush()?;
    Ok(())
}
