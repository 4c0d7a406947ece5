use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semigroup_cli::pipeline::EXIT_CONFIG;
use semigroup_cli::{run, Command};

#[derive(Parser)]
#[command(name = "semigroup", version, about = "Spectral decomposition and decay checks for matrix semigroups")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Locate poles, build projectors and compare the remainder paths.
    Decompose(RunArgs),
    /// Run scans, ledger, decomposition and decay checks.
    Verify(RunArgs),
    /// Run the exponential scans and evaluate the constants ledger.
    Ledger(RunArgs),
    /// Invert the Laplace transform along a Bromwich line.
    Reconstruct(RunArgs),
    /// Run the assumption scans only.
    Scan(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured output directory (default `output`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Decompose(a) => (Command::Decompose, a),
        Sub::Verify(a) => (Command::Verify, a),
        Sub::Ledger(a) => (Command::Ledger, a),
        Sub::Reconstruct(a) => (Command::Reconstruct, a),
        Sub::Scan(a) => (Command::Scan, a),
    };
    match run(command, &args.config, args.output_dir, args.seed) {
        Ok(outcome) => {
            for check in outcome.report.checks.iter().filter(|c| !c.pass) {
                eprintln!(
                    "{} {}: {}",
                    if check.gating { "FAIL" } else { "note" },
                    check.name,
                    check.detail
                );
            }
            for err in &outcome.report.errors {
                eprintln!("error in {}: {}", err.stage, err.message);
            }
            println!("{}", outcome.output_dir.join("report.json").display());
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
