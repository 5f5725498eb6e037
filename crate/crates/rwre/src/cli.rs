//! The `rwre` command line.
//!
//! Exit codes: 0 success, 1 a validation suite failed, 2 usage or
//! configuration error, 3 the run itself failed (I/O, exhausted
//! environment, ...).

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};

use rwre_core::env::{Environment, EnvironmentSpec};
use rwre_core::functionals::{
    bound_sandwich, compute, hitting_time_oracle, martingale_residuals, monte_carlo_hitting, DEFAULT_ORACLE_CAP,
};
use rwre_core::phase::{classify_spec, ClassifierConfig, WindowStart};
use rwre_core::rng::{derive_seed, tag};
use rwre_core::walk::FitOptions;

use crate::config::{read_header, EnvFormat, Format, Header, RunConfig, Suite, SuiteScale};
use crate::grid::GridConfig;
use crate::output::{self, FunctionalsSummary, StatsFile, SweepRow};
use crate::{envio, run, suites};

/// Counts such as `1000000`, `1e6` or `2.5e7`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let t = s.replace('_', "");
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    let x: f64 = t.parse().map_err(|_| format!("not a count: {s}"))?;
    if !(x >= 0.0) || x.fract() != 0.0 || x > 9.007_199_254_740_992e15 {
        return Err(format!("not a non-negative integer count: {s}"));
    }
    Ok(x as u64)
}

#[derive(Parser, Debug)]
#[command(name = "rwre", version, about = "Random walks in doped random environments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the resolved plan and exit.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SpecArgs {
    /// Environment spec JSON (fields: delta, dope, zeta, length, seed).
    #[arg(long)]
    pub spec: PathBuf,
    /// Override the spec's length.
    #[arg(long, value_parser = parse_count)]
    pub sites: Option<u64>,
    /// Override the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Window {
    /// Compare at sqrt(N) and N.
    Sqrt,
    /// Compare at N/2 and N.
    Half,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample an environment and write it out.
    GenEnv {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value = "bin")]
        format: EnvFormat,
        #[command(flatten)]
        common: Common,
    },
    /// Quenched functionals S, log D, log f, log Delta, log T over 0..=N.
    Functionals {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Also solve the first-step equations directly (N <= 2000).
        #[arg(long)]
        oracle: bool,
        /// Monte Carlo trials for E[tau_N] (JSON format only).
        #[arg(long, value_parser = parse_count)]
        trials: Option<u64>,
        /// Step budget shared by all Monte Carlo trials.
        #[arg(long, value_parser = parse_count, default_value = "1e9")]
        steps: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Classify one environment at truncation N (the spec's length).
    Classify {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value = "sqrt")]
        window: Window,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Phase-diagram sweep over a grid of laws.
    Sweep {
        /// Grid JSON: families, k, n, seed, margin.
        #[arg(long)]
        grid: PathBuf,
        /// Override the grid's environments per cell.
        #[arg(long, value_parser = parse_count)]
        replicas: Option<u64>,
        /// Override the grid's truncation.
        #[arg(long, value_parser = parse_count)]
        sites: Option<u64>,
        /// Override the grid's root seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "sqrt")]
        window: Window,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate walks; replica r uses environment and walk seeds derived from
    /// the root seed (default: the spec's seed).
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_parser = parse_count)]
        steps: u64,
        #[arg(long, value_parser = parse_count, default_value = "1")]
        replicas: u64,
        /// Checkpoint grid ratio.
        #[arg(long, default_value_t = 1.3)]
        ratio: f64,
        /// Emit the envelope fit instead of the raw stats.
        #[arg(long)]
        fit: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the envelope exponent to stats written by `simulate`.
    Fit {
        #[arg(long)]
        stats: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a validation suite; exit 1 if it fails.
    Validate {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 20261016)]
        seed: u64,
        #[arg(long, value_parser = parse_count)]
        sites: Option<u64>,
        #[arg(long, value_parser = parse_count)]
        steps: Option<u64>,
        #[arg(long, value_parser = parse_count)]
        trials: Option<u64>,
        #[arg(long, value_parser = parse_count)]
        replicas: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run the configuration embedded in an output file's header.
    Replay {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// A failure attributable to the invocation rather than the run.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(String);

fn usage<E: std::fmt::Display>(e: E) -> anyhow::Error {
    UsageError(e.to_string()).into()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("malformed {what} {}: {e}", path.display())))
}

fn resolve_spec(a: &SpecArgs) -> anyhow::Result<EnvironmentSpec> {
    let mut spec: EnvironmentSpec = read_json(&a.spec, "spec")?;
    if let Some(n) = a.sites {
        spec = spec.with_length(n).map_err(usage)?;
    }
    if let Some(s) = a.seed {
        spec = spec.with_seed(s);
    }
    Ok(spec)
}

fn window(w: Window) -> ClassifierConfig {
    match w {
        Window::Sqrt => ClassifierConfig { window: WindowStart::Power { exponent: 0.5 }, ..ClassifierConfig::default() },
        Window::Half => ClassifierConfig::second_half(),
    }
}

/// Turn parsed arguments into a resolved configuration.
pub fn resolve(cmd: &Command) -> anyhow::Result<(RunConfig, Common)> {
    Ok(match cmd {
        Command::GenEnv { spec, format, common } => {
            (RunConfig::GenEnv { spec: resolve_spec(spec)?, format: *format }, common.clone())
        }
        Command::Functionals { spec, format, oracle, trials, steps, common } => {
            let spec = resolve_spec(spec)?;
            if *oracle && spec.length() > DEFAULT_ORACLE_CAP as u64 {
                return Err(usage(format!("--oracle needs N <= {DEFAULT_ORACLE_CAP}")));
            }
            if trials.is_some() && *format != Format::Json {
                return Err(usage("--trials needs --format json"));
            }
            let sites = spec.length();
            let trials = trials.map(|trials| (trials, *steps));
            (RunConfig::Functionals { spec, sites, format: *format, oracle: *oracle, trials }, common.clone())
        }
        Command::Classify { spec, window: w, format, common } => {
            (RunConfig::Classify { spec: resolve_spec(spec)?, classifier: window(*w), format: *format }, common.clone())
        }
        Command::Sweep { grid, replicas, sites, seed, window: w, format, common } => {
            let mut g: GridConfig = read_json(grid, "grid")?;
            g.k = replicas.unwrap_or(g.k);
            g.n = sites.unwrap_or(g.n);
            g.seed = seed.unwrap_or(g.seed);
            g.cells().map_err(usage)?;
            (RunConfig::Sweep { grid: g, classifier: window(*w), format: *format }, common.clone())
        }
        Command::Simulate { spec, steps, replicas, ratio, fit, format, common } => {
            let root = spec.seed;
            let spec = resolve_spec(spec)?;
            if *steps == 0 || *replicas == 0 || !(*ratio > 1.0) {
                return Err(usage("--steps and --replicas must be positive and --ratio above 1"));
            }
            if *fit && *format != Format::Json {
                return Err(usage("--fit writes JSON; pass --format json"));
            }
            (
                RunConfig::Simulate {
                    seed: root.unwrap_or(spec.seed()),
                    spec,
                    steps: *steps,
                    replicas: *replicas,
                    ratio: *ratio,
                    fit: fit.then(FitOptions::default),
                    format: *format,
                },
                common.clone(),
            )
        }
        Command::Fit { stats, common } => {
            let bytes = std::fs::read(stats).map_err(|e| usage(format!("cannot read {}: {e}", stats.display())))?;
            (
                RunConfig::Fit {
                    input: stats.display().to_string(),
                    input_sha256: format!("{:x}", Sha256::digest(&bytes)),
                    options: FitOptions::default(),
                },
                common.clone(),
            )
        }
        Command::Validate { suite, seed, sites, steps, trials, replicas, common } => (
            RunConfig::Validate {
                suite: *suite,
                seed: *seed,
                scale: SuiteScale { sites: *sites, steps: *steps, trials: *trials, replicas: *replicas },
            },
            common.clone(),
        ),
        Command::Replay { file, common } => {
            let bytes = std::fs::read(file).map_err(|e| usage(format!("cannot read {}: {e}", file.display())))?;
            let header = read_header(&bytes).map_err(usage)?;
            header.verify().map_err(usage)?;
            (header.config, common.clone())
        }
    })
}

/// Work estimate for `--dry-run`.
pub fn plan(cfg: &RunConfig) -> serde_json::Value {
    let (units, work, unit) = match cfg {
        RunConfig::GenEnv { spec, .. } => (1, spec.length(), "sites"),
        RunConfig::Functionals { spec, trials, .. } => (1, spec.length() + trials.map_or(0, |t| t.1), "sites"),
        RunConfig::Classify { spec, .. } => (1, spec.length(), "sites"),
        RunConfig::Sweep { grid, .. } => {
            let cells = grid.cells().map(|c| c.len() as u64).unwrap_or(0);
            (cells * grid.k, cells * grid.k * grid.n, "sites")
        }
        RunConfig::Simulate { steps, replicas, .. } => (*replicas, steps * replicas, "steps"),
        RunConfig::Fit { .. } => (1, 0, "checkpoints"),
        RunConfig::Validate { suite, scale, .. } => (1, suites::planned_work(*suite, scale), "updates"),
    };
    // Single-core throughput of the hot loops on the development machine.
    let per_second = if unit == "steps" { 1.0e8 } else { 2.0e7 };
    json!({
        "command": cfg.name(),
        "configHash": cfg.hash(),
        "config": cfg,
        "workUnits": units,
        "work": work,
        "unit": unit,
        "estimatedCoreSeconds": work as f64 / per_second,
    })
}

/// Execute a resolved configuration. Returns the output bytes and whether
/// the run counts as passing.
pub fn execute(cfg: &RunConfig) -> anyhow::Result<(Vec<u8>, bool)> {
    match cfg {
        RunConfig::GenEnv { spec, format } => {
            let env = Environment::sample(spec);
            let h = Header::new("environment", cfg);
            let mut out = Vec::new();
            match format {
                EnvFormat::Bin => envio::write_env_bin(&mut out, &env, &h)?,
                EnvFormat::Csv => envio::write_env_csv(&mut out, &env, &h)?,
                EnvFormat::Json => out = format!("{}\n", envio::env_json(&env, &h)).into_bytes(),
            }
            Ok((out, true))
        }
        RunConfig::Functionals { spec, sites, format, oracle, trials } => {
            let env = Environment::sample(spec);
            let n = *sites as usize;
            let fns = compute(&env, n)?;
            let h = Header::new("functionals", cfg);
            if *format == Format::Csv {
                return Ok((output::functionals_csv(&h, &fns).into_bytes(), true));
            }
            let slacks = bound_sandwich(&fns, n)?;
            let summary = FunctionalsSummary {
                n,
                log_t: fns.log_t[n],
                log_f: fns.log_f[n],
                bounds: slacks.at_n,
                martingale: martingale_residuals(&env, &fns, n)?,
                slacks,
                log_t_oracle: if *oracle { Some(hitting_time_oracle(&env, n, None)?) } else { None },
                monte_carlo: match trials {
                    Some((k, budget)) => {
                        let seed = derive_seed(spec.seed(), tag::WALK, 0);
                        Some(monte_carlo_hitting(&env, n, *k, seed, *budget)?)
                    }
                    None => None,
                },
            };
            Ok((output::json_with_header(&h, &summary).into_bytes(), true))
        }
        RunConfig::Classify { spec, classifier, format } => {
            let v = classify_spec(spec, classifier);
            let h = Header::new("classification", cfg);
            Ok(match format {
                Format::Csv => (output::classify_csv(&h, &v).into_bytes(), true),
                Format::Json => (output::json_with_header(&h, &v).into_bytes(), true),
            })
        }
        RunConfig::Sweep { grid, classifier, format } => {
            let rows = run::sweep(grid, classifier)?;
            let h = Header::new("sweep", cfg);
            Ok(match format {
                Format::Csv => (output::sweep_csv(&h, grid.k, grid.n, &rows).into_bytes(), true),
                Format::Json => {
                    let rows: Vec<SweepRow> = rows.into_iter().map(|(cell, result)| SweepRow { cell, result }).collect();
                    (output::json_with_header(&h, &json!({ "cells": rows })).into_bytes(), true)
                }
            })
        }
        RunConfig::Simulate { spec, seed, steps, replicas, ratio, fit, format } => {
            let stats = run::simulate(spec, *seed, *steps, *replicas, *ratio)?;
            if let Some(opts) = fit {
                let summary = run::fit_replicas(&stats, opts, Some(spec));
                return Ok((output::json_with_header(&Header::new("fit", cfg), &summary).into_bytes(), true));
            }
            let h = Header::new("stats", cfg);
            Ok(match format {
                Format::Csv => (output::stats_csv(&h, &stats).into_bytes(), true),
                Format::Json => {
                    (output::json_with_header(&h, &StatsFile { replicas: stats }).into_bytes(), true)
                }
            })
        }
        RunConfig::Fit { input, input_sha256, options } => {
            let bytes = std::fs::read(input).with_context(|| format!("reading {input}"))?;
            anyhow::ensure!(
                format!("{:x}", Sha256::digest(&bytes)) == *input_sha256,
                "{input} changed since the fit was configured"
            );
            let text = String::from_utf8(bytes)?;
            let stats = output::read_stats(&text)?;
            // The originating spec, when the stats header carries one.
            let spec = match read_header(text.as_bytes()).map(|h| h.config) {
                Ok(RunConfig::Simulate { spec, .. }) => Some(spec),
                _ => None,
            };
            let summary = run::fit_replicas(&stats, options, spec.as_ref());
            Ok((output::json_with_header(&Header::new("fit", cfg), &summary).into_bytes(), true))
        }
        RunConfig::Validate { suite, seed, scale } => {
            let outcomes = suites::run_suite(*suite, *seed, scale)?;
            let passed = outcomes.iter().all(|o| o.passed);
            for o in &outcomes {
                eprintln!("{} {}: {} ({:.1} s)", if o.passed { "PASS" } else { "FAIL" }, tag(&o.suite), o.summary, o.seconds);
            }
            let h = Header::new("validation", cfg);
            Ok((output::json_with_header(&h, &json!({ "passed": passed, "suites": outcomes })).into_bytes(), passed))
        }
    }
}

fn tag<T: serde::Serialize>(x: &T) -> String {
    serde_json::to_value(x).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn emit(bytes: &[u8], out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            Ok(stdout.flush()?)
        }
    }
}

fn run_cli(cli: Cli) -> anyhow::Result<bool> {
    let (cfg, common) = resolve(&cli.command)?;
    if common.dry_run {
        emit(format!("{}\n", serde_json::to_string_pretty(&plan(&cfg))?).as_bytes(), common.out.as_deref())?;
        return Ok(true);
    }
    let (bytes, passed) = run::with_threads(common.threads, || execute(&cfg))??;
    emit(&bytes, common.out.as_deref())?;
    Ok(passed)
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let is_usage = e.downcast_ref::<UsageError>().is_some()
                || matches!(e.downcast_ref::<rwre_core::Error>(), Some(rwre_core::Error::InvalidParameter(_)));
            ExitCode::from(if is_usage { 2 } else { 3 })
        }
    }
}
