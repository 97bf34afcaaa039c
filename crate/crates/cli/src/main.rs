use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use surety_cli::{explain, run_suite, RunOptions, SuiteError};

/// Contract suites for text generators: run estimation suites, inspect
/// contracts.
#[derive(Parser)]
#[command(name = "surety", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite: estimate success per contract, write report and traces.
    ///
    /// Exits 0 when every contract meets its threshold, 1 on a threshold
    /// miss, 2 on configuration errors.
    Run {
        /// Suite file (JSON).
        #[arg(long)]
        suite: PathBuf,
        /// Override the suite's run count.
        #[arg(long)]
        runs: Option<u32>,
        /// Override the suite's estimation seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Backend to use: scripted | bernoulli | http.
        #[arg(long)]
        backend: Option<String>,
        /// Write the report JSON here (overrides the suite's output path).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write execution traces (JSON lines) here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print one contract's schemas, predicates, retry policies, and
    /// fallback mode.
    Explain {
        #[arg(long)]
        suite: PathBuf,
        /// Contract id within the suite.
        #[arg(long)]
        contract: String,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            suite,
            runs,
            seed,
            backend,
            report,
            trace,
        } => {
            let options = RunOptions {
                runs,
                seed,
                backend,
                report,
                trace,
            };
            match run_suite(&suite, &options) {
                Ok(summary) => {
                    print!("{}", summary.report_json);
                    if let Some(path) = &summary.report_path {
                        eprintln!("report written to {}", path.display());
                    }
                    if let Some(path) = &summary.trace_path {
                        eprintln!("traces written to {}", path.display());
                    }
                    if summary.all_passed {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("threshold missed");
                        ExitCode::from(1)
                    }
                }
                Err(error) => config_failure(error),
            }
        }
        Command::Explain { suite, contract } => match explain(&suite, &contract) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(error) => config_failure(error),
        },
    }
}

fn config_failure(error: SuiteError) -> ExitCode {
    eprintln!("{error}");
    ExitCode::from(2)
}
