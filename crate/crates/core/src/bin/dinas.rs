//! Command-line runner for experiment configs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dinas::harness::{self, ExperimentConfig, RunStatus, RunSummary};
use dinas::Error;

#[derive(Parser)]
#[command(name = "dinas", version, about = "Distributed inexact Newton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Replace the seed of every config.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Output directory (a run directory for `run`, a root for `sweep`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config.
    Run { config: PathBuf },
    /// Run every `*.json` config in a directory.
    Sweep { config_dir: PathBuf },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Summarize the runs below a results directory.
    Report { results_dir: PathBuf },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::Dataset(_) | Error::InvalidParameter(_) | Error::InvalidTopology(_) => EXIT_CONFIG,
        _ => EXIT_INTERNAL,
    }
}

fn summary_code(s: &RunSummary) -> u8 {
    match s.status {
        RunStatus::Converged => 0,
        RunStatus::NotConverged => EXIT_NOT_CONVERGED,
        RunStatus::Failed => EXIT_INTERNAL,
    }
}

fn print_summary(s: &RunSummary) {
    let status = match s.status {
        RunStatus::Converged => "converged",
        RunStatus::NotConverged => "not converged",
        RunStatus::Failed => "failed",
    };
    println!(
        "{}: {} {} after {} iterations, |g|_inf = {}, total cost = {:.4e}",
        s.name,
        s.method,
        status,
        s.iterations,
        s.final_grad_inf.map(|g| format!("{g:.3e}")).unwrap_or_else(|| "-".into()),
        s.total_cost
    );
    if let Some(e) = &s.error {
        eprintln!("{}: {e}", s.name);
    }
}

fn load(path: &Path, seed_override: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(config, cli.seed_override)?;
            let out = cli
                .out
                .clone()
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("results").join(&cfg.name));
            let summary = harness::run_experiment(&cfg, config.parent(), &out)?;
            print_summary(&summary);
            println!("results in {}", out.display());
            Ok(summary_code(&summary))
        }
        Command::Sweep { config_dir } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
            let mut code = 0;
            for (path, result) in harness::sweep(config_dir, &out, cli.seed_override)? {
                match result {
                    Ok(s) => {
                        print_summary(&s);
                        code = code.max(summary_code(&s));
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        code = code.max(error_code(&e));
                    }
                }
            }
            println!("results in {}", out.display());
            Ok(code)
        }
        Command::Validate { config } => {
            let cfg = load(config, cli.seed_override)?;
            println!("{}: ok ({} on {} nodes)", config.display(), cfg.method.label(), cfg.problem.nodes());
            Ok(0)
        }
        Command::Report { results_dir } => {
            print!("{}", harness::report(results_dir)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
