//! `fts`: simulate, project, estimate and evaluate functional time series.
//!
//! Exit codes: 0 on success, 2 when a referenced input file is missing
//! (the message names the path), 1 for any other failure.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{resolve, Overrides};

#[derive(Parser)]
#[command(
    name = "fts",
    version,
    about = "Functional time series: simulation, filter estimation, evaluation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a series from the configured process and write curve CSVs.
    Simulate {
        /// Output directory (X.csv, Y.csv, truth_filter.json, metadata.json).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Project a sampled-curve CSV onto Fourier basis coefficients.
    Project {
        /// Input curve CSV (header row holds the grid).
        #[arg(long)]
        input: PathBuf,
        /// Output coefficient CSV (header c1..cd).
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Fit the estimator selected by --mode to X.csv and Y.csv.
    Estimate {
        /// Directory holding X.csv and Y.csv.
        #[arg(long)]
        data: PathBuf,
        /// Output directory (fit.json, summary.csv).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score a fit against the ground truth and held-out predictions.
    Eval {
        /// Directory holding X.csv and Y.csv.
        #[arg(long)]
        data: PathBuf,
        /// Fit JSON; defaults to <data>/fit.json.
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Truth filter JSON; defaults to <data>/truth_filter.json.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Output directory (error_report.json, error_by_lag.csv,
        /// response_norm.csv).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Convergence sweep: 20 replicates at N in {250, 1000, 4000}.
    Sweep {
        /// Output directory (sweep.csv, sweep_summary.csv).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { out, overrides } => {
            let cfg = resolve(&overrides)?;
            commands::cmd_simulate(&cfg, &out)
        }
        Command::Project {
            input,
            output,
            overrides,
        } => {
            let cfg = resolve(&overrides)?;
            commands::cmd_project(&cfg, &input, &output)
        }
        Command::Estimate {
            data,
            out,
            overrides,
        } => {
            let cfg = resolve(&overrides)?;
            commands::cmd_estimate(&cfg, &data, &out)
        }
        Command::Eval {
            data,
            fit,
            truth,
            out,
            overrides,
        } => {
            let cfg = resolve(&overrides)?;
            let fit = fit.unwrap_or_else(|| data.join("fit.json"));
            let truth = truth.unwrap_or_else(|| data.join("truth_filter.json"));
            commands::cmd_eval(&cfg, &data, &fit, &truth, &out)
        }
        Command::Sweep { out, overrides } => {
            let cfg = resolve(&overrides)?;
            commands::cmd_sweep(&cfg, &out)
        }
    }
}

/// Missing input files exit with 2; everything else with 1.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    let missing = err.chain().any(|cause| {
        cause
            .downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::NotFound)
    });
    if missing {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
