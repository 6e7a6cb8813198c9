//! `diffstack` — simulate, verify, train, and probe multilayer diffractive
//! optical stacks from the command line.
//!
//! Every command reads one TOML experiment config (plus flag overrides,
//! flags win), validates it fully before computing anything, and writes its
//! artifacts (CSV tables, JSON summaries, binary fields, SVG plots) into the
//! output directory. Given the same config and seed, every output file is
//! byte-identical across runs and across `--threads` settings.
//!
//! Exit codes: 0 success; 1 a verified invariant failed; 2 usage or config
//! error; 3 I/O or file-format error.

mod commands;
mod config;
mod fail;
mod svg;
mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Overrides;
use crate::fail::{CliResult, Failure};
use crate::table::Cell;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    /// key,value lines.
    Csv,
    /// One JSON object.
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Nearest-centroid in field space (the linear-readout ceiling).
    Euclidean,
    /// Optical stack + noisy K-region detector readout.
    Diffractive,
    /// Small squaring-activation network on the raw field components.
    Nonlinear,
}

#[derive(Parser, Debug)]
#[command(
    name = "diffstack",
    version,
    about = "Simulator and verifier for passive multilayer diffractive optical stacks"
)]
struct Cli {
    /// Experiment config file (TOML); built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed (overrides the config; required if the config has none).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Output directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Stdout summary format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate an input field file through the configured stack.
    Simulate {
        /// Input field (.afld) or image (.pgm).
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Use a saved stack file instead of building one from the config.
        #[arg(long, value_name = "PATH")]
        stack: Option<PathBuf>,
        /// Basename for the output files.
        #[arg(long, default_value = "simulate")]
        prefix: String,
    },
    /// Check layer collapse, contraction, and the distance-bound chain.
    Verify {
        /// Internal negative control: slip one amplifying panel in, which
        /// must make the contraction suite fail.
        #[arg(long, hide = true)]
        inject_gain: bool,
    },
    /// Train the stack's panel phases on the configured dataset.
    Train {
        /// Basename for the saved trained stack.
        #[arg(long, default_value = "trained")]
        name: String,
    },
    /// Evaluate a classifier on the configured dataset.
    Classify {
        #[arg(long, value_enum, default_value_t = Method::Euclidean)]
        method: Method,
        /// Stack file for the diffractive method (default: the config
        /// stack, i.e. untrained panels).
        #[arg(long, value_name = "PATH")]
        stack: Option<PathBuf>,
    },
    /// Scan perturbation size: distance bound vs. detectability.
    Pdp {
        /// Stack file to probe (default: the config stack).
        #[arg(long, value_name = "PATH")]
        stack: Option<PathBuf>,
    },
    /// Summarize the artifacts already present in the output directory.
    Report,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let format = cli.format;
    match run(cli) {
        Ok(pairs) => emit(format, &pairs),
        Err(failure) => {
            eprintln!("error: {failure}");
            std::process::exit(failure.exit_code());
        }
    }
}

fn run(cli: Cli) -> CliResult<Vec<(&'static str, Cell)>> {
    configure_threads(cli.threads)?;
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
    };
    let cfg = config::resolve(cli.config.as_deref(), &overrides)?;
    match &cli.command {
        Command::Simulate {
            input,
            stack,
            prefix,
        } => commands::simulate::run(&cfg, input, stack.as_deref(), prefix),
        Command::Verify { inject_gain } => commands::verify::run(&cfg, *inject_gain),
        Command::Train { name } => commands::train::run(&cfg, name),
        Command::Classify { method, stack } => {
            commands::classify::run(&cfg, *method, stack.as_deref())
        }
        Command::Pdp { stack } => commands::pdp::run(&cfg, stack.as_deref()),
        Command::Report => commands::report::run(&cfg),
    }
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Failure::config("--threads must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    Ok(())
}

fn emit(format: Format, pairs: &[(&'static str, Cell)]) {
    match format {
        Format::Csv => print!("{}", table::kv_csv(pairs)),
        Format::Json => {
            let mut map = serde_json::Map::new();
            for (k, v) in pairs {
                map.insert((*k).to_string(), cell_json(v));
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::Value::Object(map))
                    .expect("summary serializes")
            );
        }
    }
}

fn cell_json(cell: &Cell) -> serde_json::Value {
    match cell {
        Cell::Int(v) => serde_json::Value::from(*v),
        Cell::Uint(v) => serde_json::Value::from(*v),
        Cell::Float(v) => serde_json::Number::from_f64(*v)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null),
        Cell::Bool(v) => serde_json::Value::from(*v),
        Cell::Text(v) => serde_json::Value::from(v.clone()),
    }
}
