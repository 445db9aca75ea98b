//! Thin scenario front end over the library. One subcommand: `run`.
//!
//! Exit codes: 0 success, 2 usage/validation/I-O, 3 solver failure,
//! 4 hard invariant failure.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use bgknet::runner::{run_scenario, RunOptions, EXIT_VALIDATION};
use bgknet::scenario::parse_scenario;

#[derive(Parser)]
#[command(name = "bgknet", version, about = "Kinetic BGK pipe-network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, sweeping epsilon if the file lists several.
    Run {
        /// Path to the JSON scenario.
        scenario: PathBuf,
        /// Also solve the macroscopic reference and record L1 distances
        /// (single-pipe wall/outflow scenarios).
        #[arg(long)]
        reference: bool,
        /// Worker threads for sweep entries.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Seed for randomized initial data.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (overrides the scenario's own).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Dump final kinetic fields per node to fields.csv.
        #[arg(long)]
        full_fields: bool,
    },
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    let Command::Run { scenario, reference, jobs, seed, output, full_fields } = cli.command;

    let text = match std::fs::read_to_string(&scenario) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", scenario.display());
            return EXIT_VALIDATION;
        }
    };
    let parsed = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }

    let opts = RunOptions { reference, jobs, seed, output, full_fields };
    match run_scenario(&parsed, &opts) {
        Ok(runs) => {
            for run in &runs {
                println!(
                    "epsilon {}: {} steps to t = {}, mass residual {:e}, \
                     max energy excess {:e}, max invariant violation {:e} -> {}",
                    run.epsilon,
                    run.summary.steps,
                    run.summary.t_final,
                    run.summary.mass_ledger_residual,
                    run.summary.max_energy_step_excess,
                    run.summary.max_invariant_violation,
                    run.dir.display()
                );
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
