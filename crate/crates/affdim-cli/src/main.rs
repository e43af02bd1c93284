//! Command-line front end: config ingestion, subcommand dispatch, and
//! result serialization. Exit codes: 0 success (warnings go into the JSON),
//! 1 invalid config or failed run, 2 resource limit.

mod commands;
mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use commands::{CliError, Ctx};
use config::{ConfigError, JobConfig};

/// Default path count for the built-in benchmark run.
const BENCH_SAMPLES: usize = 200;
/// Default path length for the built-in benchmark run.
const BENCH_LENGTH: usize = 2000;

#[derive(Parser)]
#[command(
    name = "affdim",
    version,
    about = "Dimension estimators for self-affine sets, measures, and their projections"
)]
struct Cli {
    /// Path to the JSON job config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON result here instead of stdout; CSV side tables are
    /// written as <out-stem>.<table>.csv next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker pool size; default is the available parallelism. Results do
    /// not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the estimator bisection tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Overrides the sampled path length.
    #[arg(long, global = true)]
    max_n: Option<usize>,
    /// Overrides the envelope truncation depth.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Overrides the sample count (paths or experiment trials).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Omit the timestamp so identical runs produce identical bytes.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Critical exponent of the singular-value sums for the full tuple.
    AffinityDim,
    /// Critical exponent for the maps composed with a projection.
    ProjAffinityDim,
    /// Pressure estimates on an exponent grid, with the root bracketed.
    PressureCurve,
    /// Lyapunov exponents (exact when structure allows, else Monte Carlo)
    /// plus entropy and the Lyapunov dimension.
    Lyapunov,
    /// Sampled local-exponent profile of a projected measure.
    SSpectrum,
    /// Every structural criterion applicable to the configured instance.
    Criteria,
    /// Irreducibility of the algebra generated at one exterior power.
    Irreducible {
        /// Exterior power order, 1 <= q < ambient dimension.
        #[arg(long)]
        q: usize,
    },
    /// Box-counting dimension of projected attractors over random
    /// translations, against the pressure prediction.
    BoxExperiment,
    /// Empirical local dimensions of a chaos-game cloud via ball counts.
    LocalDim,
    /// Built-in benchmark with closed-form extremes: three antidiagonal
    /// planar maps under an alternating chain, projected to the x-axis.
    #[command(name = "example-8-1")]
    Example81,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::AffinityDim => "affinity-dim",
            Command::ProjAffinityDim => "proj-affinity-dim",
            Command::PressureCurve => "pressure-curve",
            Command::Lyapunov => "lyapunov",
            Command::SSpectrum => "s-spectrum",
            Command::Criteria => "criteria",
            Command::Irreducible { .. } => "irreducible",
            Command::BoxExperiment => "box-experiment",
            Command::LocalDim => "local-dim",
            Command::Example81 => "example-8-1",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own message; usage problems are config
            // problems for exit-code purposes.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads(cli.threads);

    let budget = read_budget()?;
    let (config, mut echo) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(ConfigError::new("--config", format!("{}: {e}", path.display())))
            })?;
            let cfg = JobConfig::from_json(&text)?;
            let raw: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(ConfigError::new("<document>", e)))?;
            (Some(apply_overrides(cfg, &cli)?), raw)
        }
        None => match cli.command {
            Command::Example81 => {
                let samples = cli.trials.unwrap_or(BENCH_SAMPLES);
                let length = cli.max_n.unwrap_or(BENCH_LENGTH);
                (None, commands::benchmark_echo(samples, length))
            }
            _ => (
                None,
                // Commands that require a config fail later with a field
                // message; an empty echo keeps the envelope shape stable.
                Value::Object(Map::new()),
            ),
        },
    };
    attach_flag_echo(&mut echo, &cli);

    let ctx = Ctx {
        config,
        echo,
        seed: cli.seed,
        budget,
    };

    let doc = match &cli.command {
        Command::AffinityDim => commands::cmd_affinity_dim(&ctx)?,
        Command::ProjAffinityDim => commands::cmd_proj_affinity_dim(&ctx)?,
        Command::PressureCurve => commands::cmd_pressure_curve(&ctx)?,
        Command::Lyapunov => commands::cmd_lyapunov(&ctx)?,
        Command::SSpectrum => commands::cmd_s_spectrum(&ctx)?,
        Command::Criteria => commands::cmd_criteria(&ctx)?,
        Command::Irreducible { q } => commands::cmd_irreducible(&ctx, *q)?,
        Command::BoxExperiment => commands::cmd_box_experiment(&ctx)?,
        Command::LocalDim => commands::cmd_local_dim(&ctx)?,
        Command::Example81 => {
            let samples = cli.trials.unwrap_or(BENCH_SAMPLES);
            let length = cli.max_n.unwrap_or(BENCH_LENGTH);
            commands::cmd_benchmark(&ctx, samples, length)?
        }
    };

    let mut doc = doc;
    debug_assert_eq!(doc.command, cli.command.name());
    if cli.out.is_none() && !doc.tables.is_empty() {
        let names: Vec<&str> = doc.tables.iter().map(|(n, _)| n.as_str()).collect();
        doc.warnings.push(format!(
            "CSV tables ({}) were not written; pass --out to get side files",
            names.join(", ")
        ));
        doc.tables.clear();
    }
    doc.write(cli.out.as_deref(), !cli.no_timestamp)?;
    Ok(())
}

/// Flag values override their config counterparts.
fn apply_overrides(mut cfg: JobConfig, cli: &Cli) -> Result<JobConfig, CliError> {
    if let Some(tol) = cli.tolerance {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(CliError::Config(ConfigError::new(
                "--tolerance",
                "must be positive",
            )));
        }
        cfg.estimator.s_tol = tol;
    }
    if let Some(depth) = cli.depth {
        cfg.estimator.depth = Some(depth);
    }
    if let Some(n) = cli.max_n {
        if n == 0 {
            return Err(CliError::Config(ConfigError::new(
                "--max-n",
                "must be at least 1",
            )));
        }
        cfg.paths.length = n;
    }
    if let Some(t) = cli.trials {
        if t == 0 {
            return Err(CliError::Config(ConfigError::new(
                "--trials",
                "must be at least 1",
            )));
        }
        cfg.paths.samples = t;
        cfg.experiment.trials = t;
    }
    Ok(cfg)
}

/// Records the result-affecting flags inside the config echo. Thread count
/// is excluded: results do not depend on it, and including it would break
/// byte-identical output across pool sizes.
fn attach_flag_echo(echo: &mut Value, cli: &Cli) {
    let mut flags = Map::new();
    flags.insert("seed".into(), json!(cli.seed));
    if let Some(tol) = cli.tolerance {
        flags.insert("tolerance".into(), json!(tol));
    }
    if let Some(n) = cli.max_n {
        flags.insert("max_n".into(), json!(n));
    }
    if let Some(d) = cli.depth {
        flags.insert("depth".into(), json!(d));
    }
    if let Some(t) = cli.trials {
        flags.insert("trials".into(), json!(t));
    }
    if let Value::Object(map) = echo {
        map.insert("flags".into(), Value::Object(flags));
    }
}

fn read_budget() -> Result<Option<u64>, CliError> {
    match std::env::var("AFFDIM_BUDGET") {
        Ok(text) => {
            let value: u64 = text.trim().parse().map_err(|_| {
                CliError::Config(ConfigError::new(
                    "AFFDIM_BUDGET",
                    format!("expected a non-negative integer, got {text:?}"),
                ))
            })?;
            Ok(Some(value))
        }
        Err(_) => Ok(None),
    }
}

#[cfg(feature = "parallel")]
fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // A second init attempt in one process is harmless: the pool is
        // already running, so the error is ignored.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_threads(threads: Option<usize>) {
    if threads.is_some() {
        eprintln!("note: built without the parallel feature; --threads has no effect");
    }
}
