use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hpqkd::scenario::key_reference;
use hpqkd::{exit, run, Command, Overrides, Scenario};

const EXIT_HELP: &str = "Exit status: 0 success, 2 configuration error, 3 runtime error, \
4 optics check failed.";

#[derive(Parser)]
#[command(name = "hpqkd", version, about = "Hybrid parallel QKD simulator")]
#[command(after_long_help = format!("{}\n{EXIT_HELP}", key_reference()))]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    /// Report bundle path; overrides output.path.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Slots per session (simulate) or trials per grid point (attack-sweep).
    #[arg(long, value_name = "COUNT")]
    trials: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured session modes and compare their key rates.
    #[command(after_long_help = key_reference())]
    Simulate(RunArgs),
    /// Brute-force success over the |α|²/M grid plus the PNS exposure table.
    #[command(after_long_help = key_reference())]
    AttackSweep(RunArgs),
    /// Compare closed-form sideband intensities with the time-domain oracle.
    #[command(after_long_help = key_reference())]
    OpticsVerify(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::AttackSweep(a) => (Command::AttackSweep, a),
        Cmd::OpticsVerify(a) => (Command::OpticsVerify, a),
    };
    let overrides = Overrides {
        out: args.out,
        seed: args.seed,
        trials: args.trials,
    };
    let result =
        Scenario::load(&args.scenario).and_then(|loaded| run(command, &loaded, &overrides));
    match result {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            println!("wrote {}", summary.bundle.display());
            ExitCode::from(exit::SUCCESS as u8)
        }
        Err(e) => {
            eprintln!("hpqkd {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
