use std::path::PathBuf;
use std::process::ExitCode;

use afp_cli::{run_scenario, RunOptions, Scenario};
use afp_core::registry::{format_listing, list_registry};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afp", version, about = "Approximate fixed point and limiting-weak ODE experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write CSV/JSON artifacts.
    Run {
        config: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, env = "AFP_OUT_DIR", default_value = "out")]
        out: PathBuf,
        /// Run the precondition audits only.
        #[arg(long)]
        audit_only: bool,
    },
    /// List built-in maps and ODE fields whose name contains FILTER.
    List { filter: Option<String> },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::List { filter } => {
            print!("{}", format_listing(&list_registry(filter.as_deref().unwrap_or(""))));
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            seed,
            out,
            audit_only,
        } => {
            let mut scenario = match Scenario::load(&config) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            if let Some(seed) = seed {
                scenario.seed = seed;
            }
            let options = RunOptions {
                out_dir: out,
                audit_only,
            };
            match run_scenario(&scenario, &options) {
                Ok(report) => {
                    println!("{report}");
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    ExitCode::from(2)
                }
            }
        }
    }
}
