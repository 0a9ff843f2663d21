use std::path::PathBuf;

use clap::{Parser, Subcommand};
use goldstein_cli::artifacts::{read_json, to_json};
use goldstein_cli::bench::{cmd_bench, format_table, SuiteSpec};
use goldstein_cli::config::{Overrides, RunConfig};
use goldstein_cli::run::{cmd_solve, cmd_verify, format_report};
use goldstein_cli::{CliResult, ExitCode};
use goldstein_core::PROBLEM_NAMES;

#[derive(Parser, Debug)]
#[command(name = "goldstein", version, about = "Constrained Goldstein subgradient solver with verifiable certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

// Parsed once per process; boxing the overrides buys nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a corpus problem and write certificate, trace and manifest.
    Solve {
        /// JSON run config ({"problem": .., "solver": .., "x0": ..}).
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, env = "GOLDSTEIN_OUT_DIR", default_value = "goldstein-out")]
        out: PathBuf,
    },
    /// Replay a certificate against the problem oracles.
    Verify {
        certificate: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the advisory sampled stationarity estimate.
        #[arg(long)]
        no_estimate: bool,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run a benchmark suite.
    Bench {
        suite: PathBuf,
        #[arg(long, env = "GOLDSTEIN_OUT_DIR", default_value = "goldstein-out")]
        out: PathBuf,
    },
    /// List corpus problems.
    Problems,
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Solve { config, overrides, out } => {
            let base = config.as_deref().map(RunConfig::from_path).transpose()?;
            let cfg = overrides.apply(base)?;
            let outcome = cmd_solve(cfg, &out)?;
            if outcome.code == ExitCode::Ok {
                println!("{}", outcome.message);
            } else {
                eprintln!("error: {}", outcome.message);
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(outcome.code)
        }
        Command::Verify { certificate, samples, seed, no_estimate, json } => {
            let outcome = cmd_verify(&certificate, samples, seed, !no_estimate)?;
            if json {
                print!("{}", to_json(&outcome.report)?);
            } else {
                for line in format_report(&outcome.report) {
                    println!("{line}");
                }
                match outcome.report.failure {
                    None => println!("certificate verified"),
                    Some(k) => println!("certificate rejected: {k}"),
                }
            }
            Ok(outcome.code)
        }
        Command::Bench { suite, out } => {
            let spec: SuiteSpec = read_json(&suite, ExitCode::Usage)?;
            let report = cmd_bench(&spec, &out)?;
            print!("{}", format_table(&report.groups));
            println!("{} cells in {:.2} s, results in {}", report.cells.len(), report.wall_time_s, out.display());
            Ok(ExitCode::Ok)
        }
        Command::Problems => {
            for name in PROBLEM_NAMES {
                println!("{name}");
            }
            Ok(ExitCode::Ok)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    };
    std::process::exit(code.code());
}
