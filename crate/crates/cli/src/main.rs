mod config;
mod error;
mod output;
mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;

const EXIT_CODES: &str = "Exit codes:
  0  success
  2  configuration or input parse error
  3  enumeration budget exceeded
  4  solver did not converge
  5  I/O error";

/// Penalized least-squares aggregation experiments.
///
/// Each subcommand reads a TOML experiment config and writes `report.csv`
/// (and `report.svg` for rate sweeps) to the output directory.
#[derive(Parser)]
#[command(name = "plsagg", version, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Fit the BIC-type or weighted-l1 aggregate to the input responses.
    Aggregate(Common),
    /// Compute an oracle risk (MS, C, L or S) for a target.
    Oracle(Common),
    /// Monte Carlo check of an oracle inequality.
    CheckIneq(Common),
    /// Risk against the reference rate over an (n, M) grid.
    RateSweep(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the noise seed in the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the output directory in the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Skip the SVG plot.
    #[arg(long)]
    no_plot: bool,
}

fn execute(command: Command, args: &Common) -> Result<String, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.command != command {
        return Err(CliError::config(format!(
            "config is for `{}` but `{}` was invoked",
            cfg.command.name(),
            command.name()
        )));
    }
    if let Some(seed) = args.seed {
        match cfg.noise.as_mut() {
            Some(noise) => noise.seed = seed,
            None => log::warn!("--seed ignored: config has no [noise] table"),
        }
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }

    let outcome = run::run(&cfg)?;
    let csv = outcome.table.to_csv_bytes()?;
    let mut files = vec![("report.csv", csv)];
    if let Some(axis) = outcome.sweep_axis {
        if !args.no_plot {
            match plot::sweep_svg(&outcome.table, axis) {
                Some(svg) => files.push(("report.svg", svg.into_bytes())),
                None => log::warn!("plot skipped: a sweep plot needs at least 2 rows"),
            }
        }
    }
    let written = output::write_atomic(&cfg.output_dir, &files)?;
    let names: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    Ok(format!("{} -> {}", outcome.summary, names.join(", ")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Sub::Aggregate(a) => (Command::Aggregate, a),
        Sub::Oracle(a) => (Command::Oracle, a),
        Sub::CheckIneq(a) => (Command::CheckIneq, a),
        Sub::RateSweep(a) => (Command::RateSweep, a),
    };
    match execute(command, args) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.code)
        }
    }
}
