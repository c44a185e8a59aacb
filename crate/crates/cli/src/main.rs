//! `causal-filter`: sample processes, compute exact quantities, trace the
//! information plane and select model size from data.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "causal-filter",
    version,
    about = "Optimal causal filtering and estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a symbol series from a process.
    Generate {
        #[command(flatten)]
        source: SourceArgs,
        /// Number of symbols to draw.
        #[arg(long = "length", value_name = "T")]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Exact word joint, causal-state partition and summary quantities.
    Exact {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        words: WordArgs,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Anneal over λ on the exact joint and write the information-plane curve.
    Ocf {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        words: WordArgs,
        #[command(flatten)]
        anneal: AnnealArgs,
        /// Cluster capacity (defaults to the number of histories).
        #[arg(long)]
        max_clusters: Option<usize>,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Select the number of states from a finite series.
    Oce {
        #[command(flatten)]
        source: OptionalSourceArgs,
        /// Series file (digits, one per symbol).
        #[arg(long, value_name = "FILE", conflicts_with = "length")]
        data: Option<PathBuf>,
        /// Length of the series to sample when no data file is given.
        #[arg(long = "length", value_name = "T")]
        length: Option<usize>,
        #[command(flatten)]
        words: WordArgs,
        #[command(flatten)]
        anneal: AnnealArgs,
        #[arg(long, default_value_t = 1)]
        nc_min: usize,
        #[arg(long, default_value_t = 6)]
        nc_max: usize,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Builtin process: period4, golden_mean, even or rrxor.
    #[arg(long)]
    process: Option<String>,
    /// Process description in JSON.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = false, multiple = false)]
struct OptionalSourceArgs {
    /// Builtin process: period4, golden_mean, even or rrxor.
    #[arg(long)]
    process: Option<String>,
    /// Process description in JSON.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WordArgs {
    /// History length K.
    #[arg(long = "history", value_name = "K", default_value_t = 3)]
    history: usize,
    /// Future length L.
    #[arg(long = "future", value_name = "L", default_value_t = 2)]
    future: usize,
}

#[derive(Debug, Args)]
struct AnnealArgs {
    #[arg(long, default_value_t = 10.0)]
    lambda_start: f64,
    #[arg(long, default_value_t = 0.952)]
    rate: f64,
    #[arg(long, default_value_t = 1e-3)]
    lambda_end: f64,
    /// Restarts per λ (ocf, default 4) or anneals per N_c (oce, default 10).
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    merge_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    weight_floor: f64,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("CAUSAL_FILTER_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::config(format!(
                "CAUSAL_FILTER_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Generate {
            source,
            length,
            seed,
            out,
        } => {
            let process =
                commands::load_process(source.process.as_deref(), source.spec.as_deref())?;
            commands::generate(&process, length, seed, &out)
        }
        Command::Exact { source, words, out } => {
            let process =
                commands::load_process(source.process.as_deref(), source.spec.as_deref())?;
            commands::exact(&process, words.history, words.future, &out)
        }
        Command::Ocf {
            source,
            words,
            anneal,
            max_clusters,
            out,
        } => {
            let process =
                commands::load_process(source.process.as_deref(), source.spec.as_deref())?;
            let (sched, cfg) = commands::annealing(&anneal, 4)?;
            commands::ocf(
                &process,
                words.history,
                words.future,
                &sched,
                &cfg,
                max_clusters,
                &out,
            )
        }
        Command::Oce {
            source,
            data,
            length,
            words,
            anneal,
            nc_min,
            nc_max,
            out,
        } => {
            let (sched, cfg) = commands::annealing(&anneal, causal_filter::oce::DEFAULT_RESTARTS)?;
            let series = commands::oce_series(
                source.process.as_deref(),
                source.spec.as_deref(),
                data.as_deref(),
                length,
                anneal.seed,
            )?;
            commands::oce(
                &series,
                words.history,
                words.future,
                &sched,
                &cfg,
                nc_min,
                nc_max,
                &out,
            )
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("causal-filter: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
