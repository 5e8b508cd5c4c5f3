//! Command-line driver: flat key=value configuration, six experiment
//! subcommands, CSV and JSON output, optional gnuplot script emission.
//!
//! Exit codes: 0 success, 2 parameter or domain error, 3 flagged
//! non-convergence, 64 usage error (unknown flag or subcommand).

use crate::ensemble::{self, EnsembleSpec, Family, MEMBERSHIP_MARGIN};
use crate::error::{Error, Result};
use crate::experiments::{self, SweepConfig};
use crate::fibered::FiberedFunction;
use crate::grid::MGrid;
use crate::params::SpectralParams;
use crate::profile::FlowProfile;
use crate::record::{ExperimentRecord, GridMeta, RecordKind, Value};
use crate::sobolev;
use crate::spectral;
use crate::toy::EnergyBranch;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

const USAGE: &str = "\
usage: degenflow <subcommand> [--key value ...] [--config FILE] [--gnuplot]

subcommands:
  rate      worst-case averaging error over an ensemble vs horizon, slope fit
  dos       density of states: mode sum vs finite-difference oracle over levels
  toy       single-branch model: preimages and density of states at one level
  norm      mixed-regularity norm and Holder constants of one test function
  spectrum  band structure of the generator (merged intervals, gap report)
  sweep     rate measurements across degeneracy exponents

common flags (each also a config-file key):
  --alpha X --s X --gamma X      regularity parameters
  --c X                          speed scale of the power-law profile
  --kmax N --mgrid N --grading X mode cutoff, radial panels, mesh grading
  --family F --count N --seed N  ensemble recipe (separable-extremal |
                                 random-decay | smooth-bump)
  --T a:b:n                      geometric horizon grid
  --lambdas a:b:n                level grid (linear)
  --lambda X                     single level (toy)
  --branch EXPR                  toy branch, e.g. \"(m-0.5)^2\"
  --window a:b                   toy energy window (default: padded range)
  --k N --beta X                 separable probe mode and radial exponent
  --alphas a,b,c                 sweep list
  --profile power|table --table m1:v1,m2:v2   spectrum profile
  --tol X --log-tol X            series tolerance, envelope log tolerance
  --out FILE                     write FILE (CSV) and FILE.json
  --jobs N                       cap worker threads
  --config FILE                  key = value defaults, flags override
";

/// Flat run configuration. Every field doubles as a config-file key (with
/// `_` in the file where the flag uses `-`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub experiment: String,
    pub alpha: f64,
    pub s: f64,
    pub gamma: f64,
    pub c: f64,
    pub kmax: usize,
    pub mgrid: usize,
    pub grading: f64,
    pub family: Family,
    pub count: usize,
    pub seed: u64,
    pub t_start: f64,
    pub t_stop: f64,
    pub t_points: usize,
    pub t_geometric: bool,
    pub lambda_start: f64,
    pub lambda_stop: f64,
    pub lambda_points: usize,
    pub lambda_geometric: bool,
    pub lambda: Option<f64>,
    pub k: i64,
    pub beta: Option<f64>,
    pub branch: Option<String>,
    pub window: Option<(f64, f64)>,
    pub profile: String,
    pub table: Option<String>,
    pub alphas: Vec<f64>,
    pub tol: f64,
    pub log_tol: f64,
    pub out: Option<PathBuf>,
    pub gnuplot: bool,
    pub jobs: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            experiment: String::new(),
            alpha: 1.0,
            s: 0.75,
            gamma: 0.0,
            c: 1.0,
            kmax: 32,
            mgrid: 128,
            grading: 3.0,
            family: Family::RandomDecay,
            count: 16,
            seed: 7,
            t_start: 1.0,
            t_stop: 1e4,
            t_points: 25,
            t_geometric: true,
            lambda_start: 0.1,
            lambda_stop: 0.9,
            lambda_points: 9,
            lambda_geometric: false,
            lambda: None,
            k: 1,
            beta: None,
            branch: None,
            window: None,
            profile: "power".into(),
            table: None,
            alphas: vec![0.25, 0.5, 1.0, 2.0],
            tol: 1e-6,
            log_tol: 0.15,
            out: None,
            gnuplot: false,
            jobs: 0,
        }
    }
}

impl Config {
    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Parse(format!("bad value for {what}: {value}"));
        match key {
            "alpha" => self.alpha = value.parse().map_err(|_| bad(key))?,
            "s" => self.s = value.parse().map_err(|_| bad(key))?,
            "gamma" => self.gamma = value.parse().map_err(|_| bad(key))?,
            "c" => self.c = value.parse().map_err(|_| bad(key))?,
            "kmax" => self.kmax = value.parse().map_err(|_| bad(key))?,
            "mgrid" => self.mgrid = value.parse().map_err(|_| bad(key))?,
            "grading" => self.grading = value.parse().map_err(|_| bad(key))?,
            "family" => {
                self.family = match value {
                    "separable-extremal" | "separable" => Family::SeparableExtremal,
                    "random-decay" | "random" => Family::RandomDecay,
                    "smooth-bump" | "bump" => Family::SmoothBump,
                    _ => return Err(bad(key)),
                }
            }
            "count" => self.count = value.parse().map_err(|_| bad(key))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key))?,
            "t" => {
                let (a, b, n) = parse_grid_spec(value)?;
                (self.t_start, self.t_stop, self.t_points) = (a, b, n);
            }
            "t_start" => self.t_start = value.parse().map_err(|_| bad(key))?,
            "t_stop" => self.t_stop = value.parse().map_err(|_| bad(key))?,
            "t_points" => self.t_points = value.parse().map_err(|_| bad(key))?,
            "t_geometric" => self.t_geometric = parse_bool(value).ok_or_else(|| bad(key))?,
            "lambdas" => {
                let (a, b, n) = parse_grid_spec(value)?;
                (self.lambda_start, self.lambda_stop, self.lambda_points) = (a, b, n);
            }
            "lambda_start" => self.lambda_start = value.parse().map_err(|_| bad(key))?,
            "lambda_stop" => self.lambda_stop = value.parse().map_err(|_| bad(key))?,
            "lambda_points" => self.lambda_points = value.parse().map_err(|_| bad(key))?,
            "lambda_geometric" => {
                self.lambda_geometric = parse_bool(value).ok_or_else(|| bad(key))?
            }
            "lambda" => self.lambda = Some(value.parse().map_err(|_| bad(key))?),
            "k" => self.k = value.parse().map_err(|_| bad(key))?,
            "beta" => self.beta = Some(value.parse().map_err(|_| bad(key))?),
            "branch" => self.branch = Some(value.to_string()),
            "window" => {
                let parts: Vec<&str> = value.split(':').collect();
                if parts.len() != 2 {
                    return Err(bad(key));
                }
                let a = parts[0].parse().map_err(|_| bad(key))?;
                let b = parts[1].parse().map_err(|_| bad(key))?;
                self.window = Some((a, b));
            }
            "profile" => {
                if value != "power" && value != "table" {
                    return Err(bad(key));
                }
                self.profile = value.to_string();
            }
            "table" => self.table = Some(value.to_string()),
            "alphas" => {
                self.alphas = value
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|_| bad(key)))
                    .collect::<Result<_>>()?;
            }
            "tol" => self.tol = value.parse().map_err(|_| bad(key))?,
            "log_tol" => self.log_tol = value.parse().map_err(|_| bad(key))?,
            "out" => self.out = Some(PathBuf::from(value)),
            "gnuplot" => self.gnuplot = parse_bool(value).ok_or_else(|| bad(key))?,
            "jobs" => self.jobs = value.parse().map_err(|_| bad(key))?,
            _ => {
                return Err(Error::Parse(format!("unknown configuration key: {key}")));
            }
        }
        Ok(())
    }

    fn params(&self) -> Result<SpectralParams> {
        SpectralParams::new(self.s, self.gamma, self.alpha)
    }

    fn grid(&self) -> Result<MGrid> {
        MGrid::graded(self.mgrid, self.grading)
    }

    fn grid_meta(&self, grid: &MGrid) -> GridMeta {
        GridMeta {
            panels: grid.panels(),
            order: grid.order(),
            grading: grid.grading(),
            nodes: grid.len(),
        }
    }

    fn flow_profile(&self) -> Result<FlowProfile> {
        match self.profile.as_str() {
            "power" => FlowProfile::power_law(self.alpha, self.c),
            "table" => {
                let text = self.table.as_deref().ok_or_else(|| {
                    Error::Parameter("table profile needs --table m1:v1,m2:v2,...".into())
                })?;
                let mut points = Vec::new();
                let mut values = Vec::new();
                for pair in text.split(',') {
                    let mut it = pair.trim().split(':');
                    let (Some(m), Some(v), None) = (it.next(), it.next(), it.next()) else {
                        return Err(Error::Parse(format!("bad table entry: {pair}")));
                    };
                    points.push(m.parse().map_err(|_| Error::Parse(pair.into()))?);
                    values.push(v.parse().map_err(|_| Error::Parse(pair.into()))?);
                }
                FlowProfile::tabulated(points, values)
            }
            other => Err(Error::Parameter(format!("unknown profile kind: {other}"))),
        }
    }

    fn t_grid(&self) -> Result<Vec<f64>> {
        grid_points(
            self.t_start,
            self.t_stop,
            self.t_points,
            self.t_geometric,
        )
    }

    fn lambda_grid(&self) -> Result<Vec<f64>> {
        grid_points(
            self.lambda_start,
            self.lambda_stop,
            self.lambda_points,
            self.lambda_geometric,
        )
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

fn parse_grid_spec(value: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!(
            "grid spec must be start:stop:points, got {value}"
        )));
    }
    Ok((
        parts[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid start: {}", parts[0])))?,
        parts[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid stop: {}", parts[1])))?,
        parts[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid points: {}", parts[2])))?,
    ))
}

fn grid_points(start: f64, stop: f64, points: usize, geometric: bool) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Parameter("grid needs at least one point".into()));
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    if geometric {
        experiments::geometric_grid(start, stop, points)
    } else {
        if stop <= start {
            return Err(Error::Parameter("grid needs start < stop".into()));
        }
        let step = (stop - start) / (points - 1) as f64;
        Ok((0..points).map(|j| start + j as f64 * step).collect())
    }
}

/// Entry point mirroring a process `main`. Returns the exit code.
pub fn run(args: &[String]) -> i32 {
    match run_inner(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NotConverged(_) => 3,
                _ => 2,
            }
        }
    }
}

fn run_inner(args: &[String]) -> Result<i32> {
    let Some(subcommand) = args.first() else {
        println!("{USAGE}");
        return Ok(64);
    };
    if subcommand == "help" || subcommand == "--help" || subcommand == "-h" {
        println!("{USAGE}");
        return Ok(0);
    }
    let known = ["rate", "dos", "toy", "norm", "spectrum", "sweep"];
    if !known.contains(&subcommand.as_str()) {
        eprintln!("unknown subcommand: {subcommand}");
        println!("{USAGE}");
        return Ok(64);
    }

    // Collect flag pairs first; --config is applied before the other flags
    // so that explicit flags override file values.
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut config_file: Option<PathBuf> = None;
    let mut it = args[1..].iter().peekable();
    while let Some(tok) = it.next() {
        let Some(name) = tok.strip_prefix("--") else {
            eprintln!("unexpected argument: {tok}");
            println!("{USAGE}");
            return Ok(64);
        };
        let key = name.replace('-', "_").to_ascii_lowercase();
        if key == "gnuplot" {
            // bare boolean flag; accepts an optional explicit value
            match it.peek() {
                Some(v) if parse_bool(v).is_some() => {
                    pairs.push((key, it.next().unwrap().clone()));
                }
                _ => pairs.push((key, "true".into())),
            }
            continue;
        }
        let Some(value) = it.next() else {
            eprintln!("flag --{name} needs a value");
            println!("{USAGE}");
            return Ok(64);
        };
        if key == "config" {
            config_file = Some(PathBuf::from(value));
        } else {
            pairs.push((key, value.clone()));
        }
    }

    let mut config = Config {
        experiment: subcommand.clone(),
        ..Default::default()
    };
    if let Some(path) = config_file {
        for (key, value) in parse_config_file(&path)? {
            config.apply(&key, &value)?;
        }
    }
    for (key, value) in &pairs {
        if let Err(e) = config.apply(key, value) {
            if matches!(&e, Error::Parse(msg) if msg.starts_with("unknown configuration key")) {
                eprintln!("unknown flag: --{key}");
                println!("{USAGE}");
                return Ok(64);
            }
            return Err(e);
        }
    }

    if config.jobs > 0 {
        // Best effort: the global pool can only be sized once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build_global();
    }

    match config.experiment.as_str() {
        "rate" => run_rate(&config),
        "dos" => run_dos(&config),
        "toy" => run_toy(&config),
        "norm" => run_norm(&config),
        "spectrum" => run_spectrum(&config),
        "sweep" => run_sweep(&config),
        _ => unreachable!(),
    }
}

/// Parses a UTF-8 `key = value` file; `#` starts a comment, blank lines are
/// skipped.
pub fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            )));
        };
        pairs.push((
            key.trim().replace('-', "_").to_ascii_lowercase(),
            value.trim().to_string(),
        ));
    }
    Ok(pairs)
}

// --- experiment drivers ----------------------------------------------------

fn run_rate(config: &Config) -> Result<i32> {
    let params = config.params()?;
    let grid = config.grid()?;
    let spec = EnsembleSpec {
        params,
        kmax: config.kmax,
        count: config.count,
        seed: config.seed,
        family: config.family,
    };
    let members = ensemble::normalized(&ensemble::generate(&spec, &grid)?, &params)?;
    let profile = config.flow_profile()?;
    let t_grid = config.t_grid()?;
    let fit = experiments::rate_experiment(&members, &profile, &t_grid)?;
    let predicted = -params.rate();
    let check = experiments::envelope_check(&fit, predicted, config.log_tol)?;

    println!(
        "rate: {} members, T in [{}, {}], fitted slope {:.4}, predicted {:.4} ({})",
        members.len(),
        config.t_start,
        config.t_stop,
        fit.fitted_slope,
        predicted,
        if check.passed { "within envelope" } else { "envelope exceeded" }
    );
    println!("note: {}", check.note);

    let records: Vec<ExperimentRecord> = fit
        .samples
        .iter()
        .map(|&(t, e)| ExperimentRecord {
            kind: RecordKind::RateSample,
            params,
            grid: Some(config.grid_meta(&grid)),
            kmax: Some(config.kmax),
            seed: Some(config.seed),
            abscissa: t,
            value: Value::Real(e),
            oracle_value: None,
        })
        .collect();

    if let Some(out) = &config.out {
        let (t0, e0) = check.calibration;
        let rows: Vec<Vec<String>> = fit
            .samples
            .iter()
            .map(|&(t, e)| {
                let envelope = e0 * (t / t0).powf(predicted);
                vec![fmt(t), fmt(e), fmt(envelope)]
            })
            .collect();
        let paths = OutputPaths::new(out);
        write_csv(&paths.csv, &["T", "sup_error", "predicted_envelope"], &rows)?;
        let json = serde_json::json!({
            "schema": SCHEMA_VERSION,
            "experiment": "rate",
            "config": config,
            "records": records,
            "summary": { "fit": fit, "envelope": check },
        });
        write_json(&paths.json, &json)?;
        if config.gnuplot {
            write_gnuplot_loglog(
                &paths,
                "averaging error vs horizon",
                "T",
                "sup error",
                Some((check.constant, predicted)),
            )?;
        }
        println!("wrote {} and {}", paths.csv.display(), paths.json.display());
    }
    Ok(if check.passed { 0 } else { 3 })
}

fn run_dos(config: &Config) -> Result<i32> {
    let params = config.params()?;
    let report = params.validate();
    if !report.constraint_ok {
        return Err(Error::Parameter(format!(
            "constraint violated: gamma + s/alpha = {} <= 1/2",
            params.gamma + params.s / params.alpha
        )));
    }
    let grid = config.grid()?;
    let spec = EnsembleSpec {
        params,
        kmax: config.kmax,
        count: config.count,
        seed: config.seed,
        family: config.family,
    };
    let members = ensemble::generate(&spec, &grid)?;
    if members.is_empty() {
        return Err(Error::Parameter("empty ensemble".into()));
    }
    let profile = FlowProfile::power_law(config.alpha, 1.0)?;
    let lambdas = config.lambda_grid()?;

    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut flagged = 0usize;
    let mut worst_rel = 0.0f64;
    for &lambda_raw in &lambdas {
        for (j, f) in members.iter().enumerate() {
            let (lambda, shifted) = spectral::shift_off_resonance(f, &profile, lambda_raw)?;
            let series = spectral::dos_series(f, f, &params, lambda, config.tol)?;
            let h = spectral::default_h_sequence(lambda, 1.0);
            let oracle = spectral::dos_oracle(f, f, &profile, lambda, &h, 1e-8)?;
            if !oracle.converged {
                flagged += 1;
            }
            let rel = (series.series_value - oracle.value).norm()
                / (1.0 + oracle.value.norm());
            worst_rel = worst_rel.max(rel);
            rows.push(vec![
                fmt(lambda),
                j.to_string(),
                fmt(series.series_value.re),
                fmt(series.series_value.im),
                fmt(oracle.value.re),
                fmt(oracle.value.im),
                fmt(rel),
                series.k0.to_string(),
                series.terms_used.to_string(),
                fmt(series.tail_bound),
                (!oracle.converged || shifted).to_string(),
            ]);
            records.push(ExperimentRecord {
                kind: RecordKind::DosSample,
                params,
                grid: Some(config.grid_meta(&grid)),
                kmax: Some(config.kmax),
                seed: Some(config.seed),
                abscissa: lambda,
                value: Value::complex(series.series_value.re, series.series_value.im),
                oracle_value: Some(Value::complex(oracle.value.re, oracle.value.im)),
            });
        }
    }
    println!(
        "dos: {} levels x {} members, worst series/oracle disagreement {:.3e}, {} flagged",
        lambdas.len(),
        members.len(),
        worst_rel,
        flagged
    );

    if let Some(out) = &config.out {
        let paths = OutputPaths::new(out);
        write_csv(
            &paths.csv,
            &[
                "lambda",
                "member",
                "series_re",
                "series_im",
                "oracle_re",
                "oracle_im",
                "rel_err",
                "k0",
                "terms_used",
                "tail_bound",
                "flagged",
            ],
            &rows,
        )?;
        let json = serde_json::json!({
            "schema": SCHEMA_VERSION,
            "experiment": "dos",
            "config": config,
            "records": records,
            "summary": { "worst_rel_err": worst_rel, "flagged": flagged },
        });
        write_json(&paths.json, &json)?;
        if config.gnuplot {
            write_gnuplot_loglog(&paths, "density of states", "lambda", "series", None)?;
        }
        println!("wrote {} and {}", paths.csv.display(), paths.json.display());
    }
    Ok(if flagged > 0 { 3 } else { 0 })
}

fn run_toy(config: &Config) -> Result<i32> {
    let text = config
        .branch
        .as_deref()
        .ok_or_else(|| Error::Parameter("toy needs --branch EXPR".into()))?;
    let coeffs = expr::parse_polynomial(text)?;
    let probe = EnergyBranch::polynomial(coeffs.clone(), (-f64::MAX, f64::MAX))?;
    let window = config.window.unwrap_or_else(|| {
        let (lo, hi) = probe.range();
        let pad = 0.05 * (hi - lo).max(1.0);
        (lo - pad, hi + pad)
    });
    let branch = EnergyBranch::polynomial(coeffs, window)?;
    let lambda = config
        .lambda
        .ok_or_else(|| Error::Parameter("toy needs --lambda X".into()))?;

    let unit = |_: f64| num_complex::Complex64::new(1.0, 0.0);
    let value = branch.dos(lambda, unit)?;
    let h0 = branch.step_guard(lambda).min(0.01 * (window.1 - window.0));
    let oracle = branch.dos_quotient(lambda, unit, h0, 6)?;
    let preimages = branch.preimages(lambda)?;

    println!("branch range [{:.6}, {:.6}], window ({:.6}, {:.6})", branch.range().0, branch.range().1, window.0, window.1);
    for (m, d) in &preimages {
        println!("preimage m = {m:.12} with branch slope {d:.12}");
    }
    println!("dos({lambda}) = {}", fmt(value.re));
    println!("difference-quotient oracle = {} ({})", fmt(oracle.value.re),
        if oracle.converged { "converged" } else { "flagged" });

    if let Some(out) = &config.out {
        let paths = OutputPaths::new(out);
        write_csv(
            &paths.csv,
            &["lambda", "dos_re", "dos_im", "oracle_re", "oracle_im", "preimages"],
            &[vec![
                fmt(lambda),
                fmt(value.re),
                fmt(value.im),
                fmt(oracle.value.re),
                fmt(oracle.value.im),
                preimages.len().to_string(),
            ]],
        )?;
        let record = ExperimentRecord {
            kind: RecordKind::ToySample,
            params: config.params()?,
            grid: None,
            kmax: None,
            seed: None,
            abscissa: lambda,
            value: Value::complex(value.re, value.im),
            oracle_value: Some(Value::complex(oracle.value.re, oracle.value.im)),
        };
        let json = serde_json::json!({
            "schema": SCHEMA_VERSION,
            "experiment": "toy",
            "config": config,
            "records": [record],
            "summary": {
                "preimages": preimages,
                "window": window,
                "oracle_converged": oracle.converged,
            },
        });
        write_json(&paths.json, &json)?;
        println!("wrote {} and {}", paths.csv.display(), paths.json.display());
    }
    Ok(if oracle.converged { 0 } else { 3 })
}

fn run_norm(config: &Config) -> Result<i32> {
    let params = config.params()?;
    let grid = config.grid()?;
    let f = norm_subject(config, &params, &grid)?;
    let report = sobolev::full_norm(&f, &params)?;
    let holder = sobolev::holder_constants(&f, &params);
    let fourier = sobolev::fourier_holder_constant(&f, &params);
    let membership = sobolev::membership(&f, &params);

    println!("l2 part        = {}", fmt(report.l2_part));
    println!("seminorm part  = {}", fmt(report.seminorm_part));
    println!("total          = {}", fmt(report.total));
    println!("holder pairwise = {}", fmt(holder.pairwise));
    println!("holder decay    = {}", fmt(holder.decay));
    println!("fourier constant = {}", fmt(fourier));
    println!(
        "member of the zero-trace space: {}",
        if membership.member { "yes" } else { "no" }
    );

    if let Some(out) = &config.out {
        let paths = OutputPaths::new(out);
        write_csv(
            &paths.csv,
            &[
                "l2_part",
                "seminorm_part",
                "total",
                "holder_pairwise",
                "holder_decay",
                "fourier_constant",
            ],
            &[vec![
                fmt(report.l2_part),
                fmt(report.seminorm_part),
                fmt(report.total),
                fmt(holder.pairwise),
                fmt(holder.decay),
                fmt(fourier),
            ]],
        )?;
        let record = ExperimentRecord {
            kind: RecordKind::NormReport,
            params,
            grid: Some(config.grid_meta(&grid)),
            kmax: Some(config.kmax),
            seed: Some(config.seed),
            abscissa: 0.0,
            value: Value::Real(report.total),
            oracle_value: None,
        };
        let json = serde_json::json!({
            "schema": SCHEMA_VERSION,
            "experiment": "norm",
            "config": config,
            "records": [record],
            "summary": {
                "norm": report,
                "holder": holder,
                "fourier_constant": fourier,
                "member": membership.member,
            },
        });
        write_json(&paths.json, &json)?;
        println!("wrote {} and {}", paths.csv.display(), paths.json.display());
    }
    Ok(0)
}

fn norm_subject(config: &Config, params: &SpectralParams, grid: &MGrid) -> Result<FiberedFunction> {
    match config.family {
        Family::SeparableExtremal => {
            let beta = config
                .beta
                .unwrap_or(params.s - 0.5 + MEMBERSHIP_MARGIN);
            ensemble::separable(config.k, beta, grid, config.kmax.max(config.k.unsigned_abs() as usize))
        }
        family => {
            let spec = EnsembleSpec {
                params: *params,
                kmax: config.kmax,
                count: 1,
                seed: config.seed,
                family,
            };
            Ok(ensemble::generate(&spec, grid)?.remove(0))
        }
    }
}

fn run_spectrum(config: &Config) -> Result<i32> {
    let profile = config.flow_profile()?;
    let bands = spectral::band_spectrum(&profile, config.kmax)?;
    println!(
        "speed range [{}, {}], {}",
        fmt(profile.min_speed()),
        fmt(profile.max_speed()),
        if bands.gap_at_zero {
            "gap at zero"
        } else {
            "no gap at zero"
        }
    );
    for b in &bands.bands {
        println!("band [{}, {}]", fmt(b.lo), fmt(b.hi));
    }
    if let Some(out) = &config.out {
        let paths = OutputPaths::new(out);
        let rows: Vec<Vec<String>> = bands
            .bands
            .iter()
            .map(|b| vec![fmt(b.lo), fmt(b.hi)])
            .collect();
        write_csv(&paths.csv, &["band_lo", "band_hi"], &rows)?;
        let json = serde_json::json!({
            "schema": SCHEMA_VERSION,
            "experiment": "spectrum",
            "config": config,
            "records": [],
            "summary": bands,
        });
        write_json(&paths.json, &json)?;
        println!("wrote {} and {}", paths.csv.display(), paths.json.display());
    }
    Ok(0)
}

fn run_sweep(config: &Config) -> Result<i32> {
    let sweep_cfg = SweepConfig {
        kmax: config.kmax.min(16),
        panels: config.mgrid.min(64),
        grading: config.grading,
        count: config.count.min(8),
        seed: config.seed,
        t_start: config.t_start,
        t_stop: config.t_stop,
        t_points: config.t_points.min(17),
        log_tol: config.log_tol,
    };
    let rows = experiments::alpha_sweep(&config.alphas, config.s, &sweep_cfg)?;
    println!("alpha    gamma    measured   predicted  envelope");
    for r in &rows {
        println!(
            "{:<8} {:<8.3} {:<10.4} {:<10.4} {}",
            r.alpha,
            r.gamma,
            r.measured_slope,
            -r.predicted_rate,
            if r.envelope_ok { "ok" } else { "exceeded" }
        );
    }
    let all_ok = rows.iter().all(|r| r.envelope_ok);
    if let Some(out) = &config.out {
        let paths = OutputPaths::new(out);
        let csv_rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    fmt(r.alpha),
                    fmt(r.gamma),
                    fmt(r.measured_slope),
                    fmt(r.predicted_rate),
                    r.envelope_ok.to_string(),
                ]
            })
            .collect();
        write_csv(
            &paths.csv,
            &["alpha", "gamma", "measured_slope", "predicted_rate", "envelope_ok"],
            &csv_rows,
        )?;
        let json = serde_json::json!({
            "schema": SCHEMA_VERSION,
            "experiment": "sweep",
            "config": config,
            "records": [],
            "summary": { "rows": rows },
        });
        write_json(&paths.json, &json)?;
        println!("wrote {} and {}", paths.csv.display(), paths.json.display());
    }
    Ok(if all_ok { 0 } else { 3 })
}

// --- output helpers ---------------------------------------------------------

struct OutputPaths {
    csv: PathBuf,
    json: PathBuf,
    gnuplot: PathBuf,
}

impl OutputPaths {
    fn new(out: &Path) -> Self {
        let is_json = out.extension().is_some_and(|e| e == "json");
        let csv = if is_json {
            out.with_extension("csv")
        } else {
            out.to_path_buf()
        };
        OutputPaths {
            json: csv.with_extension("json"),
            gnuplot: csv.with_extension("gp"),
            csv,
        }
    }
}

fn fmt(v: f64) -> String {
    // Shortest representation that round-trips.
    let mut s = String::new();
    write!(s, "{v}").unwrap();
    s
}

fn csv_field(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn write_gnuplot_loglog(
    paths: &OutputPaths,
    title: &str,
    xlabel: &str,
    ylabel: &str,
    envelope: Option<(f64, f64)>,
) -> Result<()> {
    let csv = paths.csv.file_name().unwrap().to_string_lossy();
    let mut script = format!(
        "set datafile separator ','\n\
         set logscale xy\n\
         set title '{title}'\n\
         set xlabel '{xlabel}'\n\
         set ylabel '{ylabel}'\n\
         set key left bottom\n"
    );
    match envelope {
        Some((c, slope)) => {
            let _ = writeln!(
                script,
                "plot '{csv}' every ::1 using 1:2 with linespoints title 'measured', \\\n     {c} * x**({slope}) with lines dashtype 2 title 'envelope'",
            );
        }
        None => {
            let _ = writeln!(
                script,
                "plot '{csv}' every ::1 using 1:3 with linespoints title 'measured'",
            );
        }
    }
    std::fs::write(&paths.gnuplot, script)?;
    println!("wrote {}", paths.gnuplot.display());
    Ok(())
}

// --- branch expression grammar ----------------------------------------------

/// Tiny polynomial grammar for toy branches:
///
/// ```text
/// expr   := ['-'] term (('+' | '-') term)*
/// term   := factor ('*' factor)*
/// factor := atom ['^' uint]
/// atom   := number | 'm' | '(' expr ')'
/// ```
///
/// Everything reduces to coefficient vectors; degree is capped at 16.
pub mod expr {
    use crate::error::{Error, Result};

    const MAX_DEGREE: usize = 16;

    /// Parses an expression like `(m-0.5)^2 + 0.1*m` into ascending
    /// polynomial coefficients.
    pub fn parse_polynomial(text: &str) -> Result<Vec<f64>> {
        let chars: Vec<char> = text.chars().collect();
        let mut p = Parser { chars, pos: 0 };
        let mut poly = p.expr()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(Error::Parse(format!(
                "unexpected trailing input at byte {}: {text}",
                p.pos
            )));
        }
        while poly.len() > 1 && poly.last() == Some(&0.0) {
            poly.pop();
        }
        Ok(poly)
    }

    struct Parser {
        chars: Vec<char>,
        pos: usize,
    }

    impl Parser {
        fn skip_ws(&mut self) {
            while self.peek().is_some_and(|c| c.is_whitespace()) {
                self.pos += 1;
            }
        }

        fn peek(&self) -> Option<char> {
            self.chars.get(self.pos).copied()
        }

        fn eat(&mut self, c: char) -> bool {
            self.skip_ws();
            if self.peek() == Some(c) {
                self.pos += 1;
                true
            } else {
                false
            }
        }

        fn expr(&mut self) -> Result<Vec<f64>> {
            let mut acc = if self.eat('-') {
                neg(self.term()?)
            } else {
                self.term()?
            };
            loop {
                if self.eat('+') {
                    acc = add(&acc, &self.term()?);
                } else if self.eat('-') {
                    acc = add(&acc, &neg(self.term()?));
                } else {
                    return Ok(acc);
                }
            }
        }

        fn term(&mut self) -> Result<Vec<f64>> {
            let mut acc = self.factor()?;
            while self.eat('*') {
                acc = mul(&acc, &self.factor()?)?;
            }
            Ok(acc)
        }

        fn factor(&mut self) -> Result<Vec<f64>> {
            let base = self.atom()?;
            if self.eat('^') {
                self.skip_ws();
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                if start == self.pos {
                    return Err(Error::Parse("exponent must be a nonnegative integer".into()));
                }
                let n: usize = self.chars[start..self.pos]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| Error::Parse("exponent out of range".into()))?;
                let mut acc = vec![1.0];
                for _ in 0..n {
                    acc = mul(&acc, &base)?;
                }
                return Ok(acc);
            }
            Ok(base)
        }

        fn atom(&mut self) -> Result<Vec<f64>> {
            self.skip_ws();
            match self.peek() {
                Some('(') => {
                    self.pos += 1;
                    let inner = self.expr()?;
                    if !self.eat(')') {
                        return Err(Error::Parse("missing closing parenthesis".into()));
                    }
                    Ok(inner)
                }
                Some('m') => {
                    self.pos += 1;
                    Ok(vec![0.0, 1.0])
                }
                Some(c) if c.is_ascii_digit() || c == '.' => {
                    let start = self.pos;
                    while self
                        .peek()
                        .is_some_and(|c| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E')
                    {
                        self.pos += 1;
                        // allow a sign right after an exponent marker
                        if matches!(self.chars.get(self.pos - 1), Some('e') | Some('E'))
                            && matches!(self.peek(), Some('+') | Some('-'))
                        {
                            self.pos += 1;
                        }
                    }
                    let text: String = self.chars[start..self.pos].iter().collect();
                    text.parse::<f64>()
                        .map(|v| vec![v])
                        .map_err(|_| Error::Parse(format!("bad number: {text}")))
                }
                other => Err(Error::Parse(format!(
                    "expected number, 'm' or '(', found {other:?}"
                ))),
            }
        }
    }

    fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len().max(b.len())];
        for (i, &c) in a.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in b.iter().enumerate() {
            out[i] += c;
        }
        out
    }

    fn neg(a: Vec<f64>) -> Vec<f64> {
        a.into_iter().map(|c| -c).collect()
    }

    fn mul(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        if a.len() + b.len() > MAX_DEGREE + 2 {
            return Err(Error::Parse(format!(
                "polynomial degree exceeds the cap of {MAX_DEGREE}"
            )));
        }
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        Ok(out)
    }

}
