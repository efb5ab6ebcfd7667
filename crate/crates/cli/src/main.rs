//! `qsde-elim`: assumption checks, adiabatic elimination and convergence
//! sweeps for scaled quantum stochastic models.
//!
//! Exit codes: 0 success, 1 malformed input or invalid settings, 2 a
//! structural assumption fails or the fast block cannot be inverted.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod model_file;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Failure, Outcome};
use config::{Format, Overrides};

#[derive(Parser)]
#[command(
    name = "qsde-elim",
    version,
    about = "Adiabatic elimination for scaled quantum stochastic models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every structural identity; exit 2 if any fails
    Check(Common),
    /// Compute the limit coefficients and emit them as a model file
    Eliminate(Common),
    /// Sweep the distance between finite-k and limit evolutions
    Converge(Common),
    /// Generator residuals with and without the Kurtz corrector
    Kurtz(Common),
}

#[derive(Args)]
struct Common {
    /// Model file (JSON)
    #[arg(long)]
    model: PathBuf,
    /// Run configuration (JSON)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Comma-separated coupling strengths
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<f64>>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Residual tolerance for the identity checks
    #[arg(long)]
    tol: Option<f64>,
}

fn read(path: &PathBuf, what: &str) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {what} {}: {e}", path.display())))
}

type Runner = fn(&model_file::LoadedModel, &config::RunConfig) -> Result<Outcome, Failure>;

fn run(command: Command) -> Result<Outcome, Failure> {
    let (args, op): (Common, Runner) = match command {
        Command::Check(a) => (a, commands::check),
        Command::Eliminate(a) => (a, commands::eliminate),
        Command::Converge(a) => (a, commands::converge),
        Command::Kurtz(a) => (a, commands::kurtz),
    };
    let file = match &args.config {
        Some(p) => config::parse_file(&read(p, "config")?).map_err(Failure::Input)?,
        None => config::ConfigFile::default(),
    };
    let cfg = config::resolve(
        file,
        Overrides {
            out: args.out,
            format: args.format,
            ks: args.ks,
            horizon: args.horizon,
            steps: args.steps,
            tol: args.tol,
        },
    )
    .map_err(Failure::Input)?;
    let parsed = model_file::parse(&read(&args.model, "model")?).map_err(Failure::Input)?;
    let loaded = model_file::load(&parsed).map_err(Failure::Input)?;
    let outcome = op(&loaded, &cfg)?;
    match &cfg.output {
        Some(path) => fs::write(path, &outcome.text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(outcome.text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Input(format!("cannot write to stdout: {e}")))?;
        }
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(outcome) => {
            for note in &outcome.notes {
                eprintln!("{note}");
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Structure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
