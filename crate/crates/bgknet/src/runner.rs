//! Scenario execution: ε-sweeps, artifact emission, exit-code contract.
//!
//! Each sweep entry runs in its own output directory and produces the same
//! file set: `snapshots.csv`, `ends.csv`, `junctions.csv`, `totals.csv`,
//! `summary.json`, plus `l1.csv` in reference-comparison mode and
//! `fields.csv` when full kinetic dumps are requested. All emission is
//! deterministic, so reruns of one scenario are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::coupling::CouplingSpec;
use crate::diagnostics::{l1_distance, summarize, RunSummary, TraceLedger};
use crate::gas::MacroState;
use crate::macro_ref::{macro_solve, MacroClosure};
use crate::network::{simulate, states_from_blocks, NetworkError, SimulationState};
use crate::pipe::{End, PipeGrid};
use crate::scenario::{Scenario, ScenarioError};

pub const EXIT_OK: i32 = 0;
/// Bad input: CLI usage, unparseable or inconsistent scenario, I/O.
pub const EXIT_VALIDATION: i32 = 2;
/// A solver gave up mid-run (coupling root-finding, CFL, transport).
pub const EXIT_SOLVER: i32 = 3;
/// A hard invariant failed: mass-ledger closure or D-membership.
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("run at epsilon {epsilon}: {source}")]
    Solver { epsilon: f64, source: NetworkError },
    #[error("hard invariant failed at epsilon {epsilon}: {detail}")]
    Invariant { epsilon: f64, detail: String },
    #[error("reference comparison: {0}")]
    Reference(String),
    #[error("i/o on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_) | RunError::Reference(_) | RunError::Io { .. } => EXIT_VALIDATION,
            RunError::Solver { source, .. } => match source {
                NetworkError::Invalid(_) | NetworkError::FieldMismatch => EXIT_VALIDATION,
                NetworkError::LedgerMismatch { .. } => EXIT_INVARIANT,
                _ => EXIT_SOLVER,
            },
            RunError::Invariant { .. } => EXIT_INVARIANT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Also solve the macroscopic reference and record L¹ distances per
    /// snapshot time (single-pipe wall/outflow scenarios only).
    pub reference: bool,
    /// Worker threads for sweep entries; 1 = sequential.
    pub jobs: usize,
    /// Seed for randomized initial data.
    pub seed: u64,
    /// Overrides the scenario's output directory.
    pub output: Option<PathBuf>,
    /// Dump the final kinetic state per node to fields.csv.
    pub full_fields: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { reference: false, jobs: 1, seed: 0, output: None, full_fields: false }
    }
}

/// What one sweep entry left behind.
#[derive(Debug)]
pub struct RunArtifacts {
    pub epsilon: f64,
    pub dir: PathBuf,
    pub summary: RunSummary,
}

/// Ratio of reference cells to kinetic cells in comparison mode.
const REFERENCE_REFINEMENT: usize = 4;

/// Runs every sweep entry of a parsed scenario, returning artifacts in
/// sweep order. With `jobs > 1` the entries run fork-join in parallel;
/// each entry writes only its own directory, so outputs are identical to
/// a sequential run.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<Vec<RunArtifacts>, RunError> {
    let base = opts
        .output
        .clone()
        .or_else(|| scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let runs: Vec<(usize, f64, PathBuf)> = scenario
        .epsilons
        .iter()
        .enumerate()
        .map(|(i, &eps)| (i, eps, base.join(format!("eps_{eps}"))))
        .collect();

    let jobs = opts.jobs.max(1).min(runs.len().max(1));
    if jobs == 1 {
        return runs
            .iter()
            .map(|(_, eps, dir)| run_single(scenario, *eps, dir, opts))
            .collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunArtifacts, RunError>>>> =
        runs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= runs.len() {
                    break;
                }
                let (_, eps, dir) = &runs[k];
                let result = run_single(scenario, *eps, dir, opts);
                *slots[k].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker covered every run"))
        .collect()
}

fn run_single(
    scenario: &Scenario,
    epsilon: f64,
    dir: &Path,
    opts: &RunOptions,
) -> Result<RunArtifacts, RunError> {
    let fields = scenario
        .initial_fields(epsilon, opts.seed)
        .map_err(|source| RunError::Solver { epsilon, source })?;
    let mut ledger = TraceLedger::new(Vec::new(), scenario.record_every);
    let state = simulate(
        &scenario.params,
        &scenario.vgrid,
        &scenario.topology,
        fields,
        scenario.config(epsilon),
        &mut ledger,
    )
    .map_err(|source| RunError::Solver { epsilon, source })?;

    check_domain(&state, epsilon)?;
    let mut summary = summarize(&ledger);
    if opts.reference {
        let rows = reference_distances(scenario, &ledger, opts.seed)?;
        summary.l1_to_reference = Some(rows);
    }
    write_artifacts(scenario, &ledger, &summary, &state, dir, opts)?;
    Ok(RunArtifacts { epsilon, dir: dir.to_path_buf(), summary })
}

/// Post-run D-membership check over every cell and node.
fn check_domain(state: &SimulationState, epsilon: f64) -> Result<(), RunError> {
    for (i, field) in state.fields.iter().enumerate() {
        for (k, pair) in field.values().iter().enumerate() {
            if !pair.in_domain() || !pair.f0.is_finite() || !pair.f1.is_finite() {
                return Err(RunError::Invariant {
                    epsilon,
                    detail: format!(
                        "pipe {i} flat index {k} left the kinetic domain: ({}, {})",
                        pair.f0, pair.f1
                    ),
                });
            }
        }
    }
    Ok(())
}

fn closure_of(spec: &CouplingSpec) -> Option<MacroClosure> {
    match spec {
        CouplingSpec::SolidWallReflect | CouplingSpec::SolidWallMaxwellian => {
            Some(MacroClosure::Wall)
        }
        CouplingSpec::FreeOutflow => Some(MacroClosure::Outflow),
        CouplingSpec::MaxwellianProjection { inner } => closure_of(inner),
        _ => None,
    }
}

/// Solves the macroscopic reference on a grid `REFERENCE_REFINEMENT` times
/// finer and returns (time, L¹ρ, L¹ρu) rows at every snapshot time.
fn reference_distances(
    scenario: &Scenario,
    ledger: &TraceLedger,
    seed: u64,
) -> Result<Vec<(f64, f64, f64)>, RunError> {
    let topo = &scenario.topology;
    if topo.pipes.len() != 1 {
        return Err(RunError::Reference(format!(
            "needs a single pipe, scenario has {}",
            topo.pipes.len()
        )));
    }
    let mut minus = None;
    let mut plus = None;
    for (j, junction) in topo.junctions.iter().enumerate() {
        for a in &junction.attachments {
            let closure = closure_of(&junction.coupling).ok_or_else(|| {
                RunError::Reference(format!(
                    "junction {j} has no macroscopic counterpart (walls and outflow only)"
                ))
            })?;
            match a.end {
                End::Minus => minus = Some(closure),
                End::Plus => plus = Some(closure),
            }
        }
    }
    let (minus, plus) = (minus.expect("validated end"), plus.expect("validated end"));

    let coarse = &topo.pipes[0];
    let fine = PipeGrid::new(
        coarse.a_minus,
        coarse.a_plus,
        coarse.n_cells * REFERENCE_REFINEMENT,
        coarse.area,
    )
    .expect("refinement of a valid grid");
    let blocks = &scenario.block_tables(seed)[0];
    let mut reference = states_from_blocks(&fine, blocks);

    // Snapshot rows arrive cell-ordered per step; group them by step.
    let mut rows = Vec::new();
    let mut t_prev = 0.0;
    let mut k = 0;
    let snaps = &ledger.snapshots;
    while k < snaps.len() {
        let step = snaps[k].step;
        let time = snaps[k].time;
        let mut kinetic = Vec::with_capacity(coarse.n_cells);
        while k < snaps.len() && snaps[k].step == step {
            let r = &snaps[k];
            kinetic.push(MacroState::new(r.rho, if r.rho > 0.0 { r.q / r.rho } else { 0.0 }));
            k += 1;
        }
        if time > t_prev {
            reference = macro_solve(
                &scenario.params,
                &scenario.vgrid,
                &fine,
                reference,
                time - t_prev,
                scenario.cfl,
                minus,
                plus,
            )
            .map_err(|e| RunError::Reference(e.to_string()))?;
            t_prev = time;
        }
        let (d_rho, d_q) = l1_distance(&kinetic, coarse.dx, &reference, fine.dx)
            .map_err(|e| RunError::Reference(e.to_string()))?;
        rows.push((time, d_rho, d_q));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Artifact emission. Floats print via the shortest round-trip formatter,
// so files are byte-stable across reruns.

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| RunError::Io { path, source })
}

fn write_artifacts(
    scenario: &Scenario,
    ledger: &TraceLedger,
    summary: &RunSummary,
    state: &SimulationState,
    dir: &Path,
    opts: &RunOptions,
) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)
        .map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;

    let mut snap = String::from("step,time,pipe,x,rho,q,omega1,omega2\n");
    for r in &ledger.snapshots {
        writeln!(
            snap,
            "{},{},{},{},{},{},{},{}",
            r.step, r.time, r.pipe, r.x, r.rho, r.q, r.omega1, r.omega2
        )
        .unwrap();
    }
    write_file(dir, "snapshots.csv", &snap)?;

    let n_extra = ledger.generators.len();
    let mut ends = String::from(
        "step,time,pipe,end,mass_flux,momentum_flux,energy_flux,\
         mass_int,momentum_int,energy_int,trace_rho,trace_u",
    );
    for i in 0..n_extra {
        write!(ends, ",psi_{i}").unwrap();
    }
    for i in 0..n_extra {
        write!(ends, ",psi_int_{i}").unwrap();
    }
    ends.push('\n');
    for r in &ledger.end_rows {
        write!(
            ends,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.time,
            r.pipe,
            if r.end_plus { "plus" } else { "minus" },
            r.mass_flux,
            r.momentum_flux,
            r.energy_flux,
            r.mass_int,
            r.momentum_int,
            r.energy_int,
            r.trace_rho,
            r.trace_u
        )
        .unwrap();
        for v in r.psi.iter().chain(&r.psi_int) {
            write!(ends, ",{v}").unwrap();
        }
        ends.push('\n');
    }
    write_file(dir, "ends.csv", &ends)?;

    let mut junctions = String::from(
        "step,time,junction,mass_flux_in,mass_flux_out,energy_flux_in,energy_flux_out,\
         hull_flux_in,hull_flux_out,mass_slack,energy_slack,mass_slack_int,energy_slack_int\n",
    );
    for r in &ledger.junction_rows {
        writeln!(
            junctions,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.time,
            r.junction,
            r.mass_flux_in,
            r.mass_flux_out,
            r.energy_flux_in,
            r.energy_flux_out,
            r.hull_flux_in,
            r.hull_flux_out,
            r.mass_slack,
            r.energy_slack,
            r.mass_slack_int,
            r.energy_slack_int
        )
        .unwrap();
    }
    write_file(dir, "junctions.csv", &junctions)?;

    let mut totals = String::from("step,time,mass,energy,max_violation\n");
    for r in &ledger.totals {
        writeln!(totals, "{},{},{},{},{}", r.step, r.time, r.mass, r.energy, r.max_violation)
            .unwrap();
    }
    write_file(dir, "totals.csv", &totals)?;

    if let Some(rows) = &summary.l1_to_reference {
        let mut l1 = String::from("time,l1_rho,l1_q\n");
        for (t, d_rho, d_q) in rows {
            writeln!(l1, "{t},{d_rho},{d_q}").unwrap();
        }
        write_file(dir, "l1.csv", &l1)?;
    }

    if opts.full_fields {
        let mut dump = String::from("pipe,cell,x,node,xi,f0,f1\n");
        for (i, (grid, field)) in scenario.topology.pipes.iter().zip(&state.fields).enumerate() {
            for c in 0..grid.n_cells {
                for (k, pair) in field.cell(c).iter().enumerate() {
                    writeln!(
                        dump,
                        "{},{},{},{},{},{},{}",
                        i,
                        c,
                        grid.x_center(c),
                        k,
                        scenario.vgrid.node(k),
                        pair.f0,
                        pair.f1
                    )
                    .unwrap();
                }
            }
        }
        write_file(dir, "fields.csv", &dump)?;
    }

    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    write_file(dir, "summary.json", &format!("{json}\n"))
}
