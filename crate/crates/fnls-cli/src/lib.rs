//! Command-line driver: parses a run config, runs one experiment, writes a sealed run
//! directory. Exit codes: 0 success, 1 I/O or internal failure, 2 invalid input,
//! 3 numerical non-convergence.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
pub mod experiments;
pub mod output;
pub mod verify;

use cache::ConstantsCache;
use clap::{Parser, Subcommand};
use config::{Experiment, RunConfig};
use experiments::{CliError, Context};
use output::RunDir;
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "fnls", version, about = "Normalized ground states of the critical fractional NLS")]
pub struct Cli {
    /// Run config (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Overrides `solver.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Extra `key=value` assignments, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Skip the on-disk constants cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smallness thresholds, verdict and h-profile.
    Thresholds,
    /// Estimate the Gagliardo–Nirenberg and Sobolev constants.
    Constants,
    /// Critical points and curve of the fiber map for given coefficients.
    Fiber,
    /// Scaling fits of truncated extremals.
    Extremals,
    /// One ground-state solve.
    Solve,
    /// m(μ) along a schedule.
    Sweep,
    /// Self-check of the numerical core.
    Verify,
    /// Run the experiment named by the config's `experiment` key.
    Run,
}

impl Command {
    fn experiment(&self) -> Option<Experiment> {
        Some(match self {
            Command::Thresholds => Experiment::Thresholds,
            Command::Constants => Experiment::Constants,
            Command::Fiber => Experiment::Fiber,
            Command::Extremals => Experiment::Extremals,
            Command::Solve => Experiment::Solve,
            Command::Sweep => Experiment::Sweep,
            Command::Verify => Experiment::Verify,
            Command::Run => return None,
        })
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::parse(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.solver.seed = seed;
    }
    Ok(cfg)
}

/// Runs one invocation.
pub fn execute(cli: Cli, log: &mut (dyn FnMut(&str) + Send)) -> Result<(), CliError> {
    let mut cfg = load_config(&cli)?;
    let experiment = cfg.resolve_experiment(cli.command.experiment())?;
    cfg.solver.validate()?;
    let out_dir = cfg.require_output_dir()?;
    let mut cache = if cli.no_cache {
        ConstantsCache::disabled()
    } else {
        ConstantsCache::load(cache::default_path().as_deref())?
    };
    let mut run = RunDir::create(&out_dir)?;
    run.write("config.txt", cfg.to_text().as_bytes())?;

    let body = |run: &mut RunDir, cache: &mut ConstantsCache, log: &mut (dyn FnMut(&str) + Send)| -> Result<bool, CliError> {
        if experiment == Experiment::Verify {
            let report = verify::run(run, log)?;
            log(&format!("verify: {} passed, {} failed", report.passed, report.failed));
            return Ok(true);
        }
        let mut ctx = Context { cfg: &cfg, cache, log };
        match experiment {
            Experiment::Thresholds => experiments::thresholds(&mut ctx, run),
            Experiment::Constants => experiments::constants(&mut ctx, run),
            Experiment::Fiber => experiments::fiber(&mut ctx, run),
            Experiment::Extremals => experiments::extremals(&mut ctx, run),
            Experiment::Solve => experiments::solve(&mut ctx, run),
            Experiment::Sweep => experiments::sweep(&mut ctx, run),
            Experiment::Verify => unreachable!(),
        }
    };
    let ok = in_pool(cli.jobs, || body(&mut run, &mut cache, log))??;
    run.finish(experiment.name())?;
    if ok {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!("{} did not converge; see {}", experiment.name(), out_dir.display())))
    }
}

#[cfg(feature = "parallel")]
fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn in_pool<T: Send>(_jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    Ok(f())
}

/// Parses `args` and runs; errors go to stderr. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut log = |m: &str| eprintln!("{m}");
    match execute(cli, &mut log) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
