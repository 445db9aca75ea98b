//! The file-driven workflow, end to end in one process: write a scenario,
//! parse and validate it, sweep the relaxation times in parallel, then
//! read the summaries back.
//!
//! The same JSON works with the installed binary:
//! `bgknet run scenario.json --jobs 2 --output out`.
//!
//! Run with `cargo run --example scenario_pipeline`.

use bgknet::runner::{run_scenario, RunOptions};
use bgknet::scenario::parse_scenario;

fn main() {
    let text = r#"{
  "gas": {"gamma": 2.0, "kappa": 1.0},
  "velocity_grid": {"bound": 6.0, "nodes": 32},
  "hull": {"omega_min": -3.2, "omega_max": 3.2},
  "pipes": [
    {"x_min": 0.0, "x_max": 1.0, "cells": 60, "area": 1.0,
     "blocks": [{"x_end": 0.5, "rho": 1.0, "u": 0.0},
                {"x_end": 1.0, "rho": 0.4, "u": 0.0}]}
  ],
  "junctions": [
    {"attachments": [{"pipe": 0, "end": "minus"}],
     "coupling": {"type": "solid_wall_reflect"}},
    {"attachments": [{"pipe": 0, "end": "plus"}],
     "coupling": {"type": "solid_wall_reflect"}}
  ],
  "epsilon": [0.1, 0.01, 0.001],
  "t_end": 0.1,
  "cfl": 0.9,
  "record_every": 20
}"#;

    let scenario = parse_scenario(text).expect("scenario should validate");
    for w in &scenario.warnings {
        eprintln!("warning: {w}");
    }

    let out = std::env::temp_dir().join(format!("bgknet-pipeline-{}", std::process::id()));
    let opts = RunOptions {
        reference: true,
        jobs: 3,
        output: Some(out.clone()),
        ..RunOptions::default()
    };
    let runs = run_scenario(&scenario, &opts).expect("sweep should run");

    println!("{:>10} {:>7} {:>14} {:>16} {:>12}", "epsilon", "steps", "mass residual", "energy excess", "final L1");
    for run in &runs {
        let s = &run.summary;
        let l1 = s
            .l1_to_reference
            .as_ref()
            .and_then(|rows| rows.last())
            .map(|&(_, d_rho, _)| d_rho)
            .unwrap_or(f64::NAN);
        println!(
            "{:>10.0e} {:>7} {:>14.3e} {:>16.3e} {:>12.4e}",
            run.epsilon, s.steps, s.mass_ledger_residual, s.max_energy_step_excess, l1
        );
    }
    println!("artifacts under {}", out.display());
    println!("(snapshots.csv, ends.csv, junctions.csv, totals.csv, l1.csv, summary.json per epsilon)");
}
