//! Ledgers and certificates: entropy-flux traces ψ_S at pipe ends, junction
//! budget rows, invariant-domain monitoring, and L¹ comparison utilities.
//!
//! Flux integrals are accumulated every step with exact Δt weights and
//! emitted at a configurable cadence, so ledger closure does not depend on
//! how often rows are written.

use crate::coupling::BudgetReport;
use crate::entropy::{kinetic_entropy_s, EntropyGenerator};
use crate::gas::{q_map, GasParams, KineticPair, MacroState, VACUUM_FLOOR};
use crate::pipe::{End, KineticField};
use crate::quad::NeumaierSum;
use crate::velocity::VelocityGrid;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("grids are incompatible: {a} vs {b} cells (no integer ratio)")]
    GridMismatch { a: usize, b: usize },
}

/// Signed entropy-flux trace at one pipe end, oriented so that flux into
/// the pipe counts positive (the junction-local frame). The comb combines
/// the applied ghost on the incoming half with the stored trace on the
/// outgoing half; for S ≡ 1 this is the net mass flux, for S(v) = v the
/// net momentum flux.
pub fn psi_s(
    params: &GasParams,
    vgrid: &VelocityGrid,
    end: End,
    trace: &[KineticPair],
    ghost: &[KineticPair],
    gens: &[EntropyGenerator],
) -> Vec<f64> {
    let orient = -end.outgoing_sign();
    gens.iter()
        .map(|gen| {
            let mut acc = NeumaierSum::new();
            for k in 0..vgrid.len() {
                let xi = vgrid.node(k);
                let f = if xi * end.outgoing_sign() > 0.0 { trace[k] } else { ghost[k] };
                let h = kinetic_entropy_s(params, gen, f, xi).unwrap_or(f64::NAN);
                acc.add(xi * vgrid.weight() * h);
            }
            orient * acc.value()
        })
        .collect()
}

/// Max over nonvacuum entries of (ω2 − ω_max)₊ + (ω_min − ω1)₊; zero means
/// the whole field sits inside the invariant hull.
pub fn invariant_violation(
    params: &GasParams,
    vgrid: &VelocityGrid,
    field: &KineticField,
    hull: (f64, f64),
) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..field.n_cells() {
        let cell = field.cell(i);
        for (k, f) in cell.iter().enumerate() {
            if f.f0 < VACUUM_FLOOR {
                continue;
            }
            if let Ok(w) = q_map(params, *f, vgrid.node(k)) {
                let excess = (w.omega2 - hull.1).max(0.0) + (hull.0 - w.omega1).max(0.0);
                worst = worst.max(excess);
            }
        }
    }
    worst
}

/// Δx-weighted L¹ distances of (ρ, ρu) between two cell-averaged fields.
/// A finer field with an integer cell ratio is restricted by block
/// averaging first; anything else is an error.
pub fn l1_distance(
    a: &[MacroState],
    dx_a: f64,
    b: &[MacroState],
    dx_b: f64,
) -> Result<(f64, f64), DiagnosticsError> {
    if a.len() == b.len() {
        let mut d_rho = NeumaierSum::new();
        let mut d_q = NeumaierSum::new();
        for (x, y) in a.iter().zip(b) {
            d_rho.add(dx_a * (x.rho - y.rho).abs());
            d_q.add(dx_a * (x.rho * x.u - y.rho * y.u).abs());
        }
        return Ok((d_rho.value(), d_q.value()));
    }
    if b.len() > a.len() && b.len() % a.len() == 0 {
        let ratio = b.len() / a.len();
        let restricted: Vec<MacroState> = b
            .chunks(ratio)
            .map(|c| {
                let rho = c.iter().map(|s| s.rho).sum::<f64>() / ratio as f64;
                let q = c.iter().map(|s| s.rho * s.u).sum::<f64>() / ratio as f64;
                MacroState::new(rho, if rho > 0.0 { q / rho } else { 0.0 })
            })
            .collect();
        return l1_distance(a, dx_a, &restricted, dx_a);
    }
    if a.len() > b.len() && a.len() % b.len() == 0 {
        let (d_rho, d_q) = l1_distance(b, dx_b, a, dx_a)?;
        return Ok((d_rho, d_q));
    }
    Err(DiagnosticsError::GridMismatch { a: a.len(), b: b.len() })
}

/// Everything one step hands to the recorder.
pub struct StepSample<'a> {
    pub step: u64,
    /// Beginning-of-step time at which traces and couplings were evaluated.
    pub time: f64,
    pub dt: f64,
    pub ends: Vec<EndSample<'a>>,
    pub junctions: Vec<JunctionSample>,
    /// Post-step network totals and certificates.
    pub total_mass: f64,
    pub total_energy: f64,
    pub max_violation: f64,
    /// |Δmass − Δt·Σ slacks| relative to the network mass.
    pub mass_residual: f64,
    /// (ΔE − Δt·Σ energy slacks)₊ relative to the initial energy.
    pub energy_excess: f64,
}

pub struct EndSample<'a> {
    pub pipe: usize,
    pub end: End,
    pub area: f64,
    pub trace: &'a [KineticPair],
    pub ghost: &'a [KineticPair],
    /// First interior cell moments, the discrete trace surrogate.
    pub boundary_cell: MacroState,
}

pub struct JunctionSample {
    pub junction: usize,
    pub report: BudgetReport,
}

/// One emitted row per pipe end: `*_int` fields integrate over the steps
/// since the previous row; instantaneous fields are sampled at the start
/// of the last accumulated step.
#[derive(Debug, Clone, Serialize)]
pub struct EndRow {
    pub step: u64,
    pub time: f64,
    pub pipe: usize,
    pub end_plus: bool,
    pub mass_flux: f64,
    pub momentum_flux: f64,
    pub energy_flux: f64,
    pub psi: Vec<f64>,
    pub mass_int: f64,
    pub momentum_int: f64,
    pub energy_int: f64,
    pub psi_int: Vec<f64>,
    pub trace_rho: f64,
    pub trace_u: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct JunctionRow {
    pub step: u64,
    pub time: f64,
    pub junction: usize,
    pub mass_flux_in: f64,
    pub mass_flux_out: f64,
    pub energy_flux_in: f64,
    pub energy_flux_out: f64,
    pub hull_flux_in: f64,
    pub hull_flux_out: f64,
    pub mass_slack: f64,
    pub energy_slack: f64,
    pub mass_slack_int: f64,
    pub energy_slack_int: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TotalsRow {
    pub step: u64,
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub max_violation: f64,
}

/// Optional per-record macroscopic snapshot of one cell.
#[derive(Debug, Clone, Serialize)]
pub struct SnapshotRow {
    pub step: u64,
    pub time: f64,
    pub pipe: usize,
    pub x: f64,
    pub rho: f64,
    pub q: f64,
    pub omega1: f64,
    pub omega2: f64,
}

#[derive(Default)]
struct EndAccum {
    mass: f64,
    momentum: f64,
    energy: f64,
    psi: Vec<f64>,
}

#[derive(Clone)]
struct PendingEnd {
    psi_builtin: [f64; 3],
    psi_extra: Vec<f64>,
    trace: MacroState,
}

/// Append-only recorder; the single serialized sink of a run.
pub struct TraceLedger {
    /// ψ generators beyond the built-in mass/momentum/energy triple.
    pub generators: Vec<EntropyGenerator>,
    pub record_every: usize,
    pub end_rows: Vec<EndRow>,
    pub junction_rows: Vec<JunctionRow>,
    pub totals: Vec<TotalsRow>,
    pub snapshots: Vec<SnapshotRow>,
    pub initial_mass: f64,
    pub initial_energy: f64,
    /// Cumulative ∫ slack dt per junction id.
    pub slack_mass_int: Vec<f64>,
    pub slack_energy_int: Vec<f64>,
    pub max_violation: f64,
    pub max_energy_excess: f64,
    pub max_mass_residual: f64,
    ends: Vec<(usize, End)>,
    acc_ends: Vec<EndAccum>,
    acc_junction_mass: Vec<f64>,
    acc_junction_energy: Vec<f64>,
    pending_ends: Vec<PendingEnd>,
    pending_junctions: Vec<(usize, BudgetReport)>,
    pending_steps: usize,
    pending_meta: (u64, f64),
    started: bool,
}

impl TraceLedger {
    pub fn new(generators: Vec<EntropyGenerator>, record_every: usize) -> Self {
        TraceLedger {
            generators,
            record_every: record_every.max(1),
            end_rows: Vec::new(),
            junction_rows: Vec::new(),
            totals: Vec::new(),
            snapshots: Vec::new(),
            initial_mass: 0.0,
            initial_energy: 0.0,
            slack_mass_int: Vec::new(),
            slack_energy_int: Vec::new(),
            max_violation: 0.0,
            max_energy_excess: 0.0,
            max_mass_residual: 0.0,
            ends: Vec::new(),
            acc_ends: Vec::new(),
            acc_junction_mass: Vec::new(),
            acc_junction_energy: Vec::new(),
            pending_ends: Vec::new(),
            pending_junctions: Vec::new(),
            pending_steps: 0,
            pending_meta: (0, 0.0),
            started: false,
        }
    }

    /// Registers the pre-run totals as step-0 rows.
    pub fn begin(&mut self, mass: f64, energy: f64, violation: f64) {
        assert!(!self.started, "ledger already started");
        self.started = true;
        self.initial_mass = mass;
        self.initial_energy = energy;
        self.max_violation = violation;
        self.totals.push(TotalsRow { step: 0, time: 0.0, mass, energy, max_violation: violation });
    }

    fn end_slot(&mut self, pipe: usize, end: End) -> usize {
        if let Some(i) = self.ends.iter().position(|&(p, e)| p == pipe && e == end) {
            return i;
        }
        self.ends.push((pipe, end));
        self.acc_ends.push(EndAccum {
            psi: vec![0.0; self.generators.len()],
            ..EndAccum::default()
        });
        self.pending_ends.push(PendingEnd {
            psi_builtin: [0.0; 3],
            psi_extra: vec![0.0; self.generators.len()],
            trace: MacroState::VACUUM,
        });
        self.ends.len() - 1
    }

    /// Accumulates one step and emits rows at the configured cadence.
    pub fn record_step(&mut self, params: &GasParams, vgrid: &VelocityGrid, sample: StepSample) {
        assert!(self.started, "record_step before begin");
        let builtin = [
            EntropyGenerator::One,
            EntropyGenerator::Velocity,
            EntropyGenerator::HalfSquare,
        ];
        for e in &sample.ends {
            let slot = self.end_slot(e.pipe, e.end);
            let psi_b = psi_s(params, vgrid, e.end, e.trace, e.ghost, &builtin);
            let extras = self.generators.clone();
            let psi_x = psi_s(params, vgrid, e.end, e.trace, e.ghost, &extras);
            let acc = &mut self.acc_ends[slot];
            acc.mass += sample.dt * psi_b[0];
            acc.momentum += sample.dt * psi_b[1];
            acc.energy += sample.dt * psi_b[2];
            for (a, p) in acc.psi.iter_mut().zip(&psi_x) {
                *a += sample.dt * p;
            }
            let pend = &mut self.pending_ends[slot];
            pend.psi_builtin = [psi_b[0], psi_b[1], psi_b[2]];
            pend.psi_extra = psi_x;
            pend.trace = e.boundary_cell;
        }
        self.pending_junctions.clear();
        for j in &sample.junctions {
            if j.junction >= self.slack_mass_int.len() {
                self.slack_mass_int.resize(j.junction + 1, 0.0);
                self.slack_energy_int.resize(j.junction + 1, 0.0);
                self.acc_junction_mass.resize(j.junction + 1, 0.0);
                self.acc_junction_energy.resize(j.junction + 1, 0.0);
            }
            self.slack_mass_int[j.junction] += sample.dt * j.report.mass_slack;
            self.slack_energy_int[j.junction] += sample.dt * j.report.energy_slack;
            self.acc_junction_mass[j.junction] += sample.dt * j.report.mass_slack;
            self.acc_junction_energy[j.junction] += sample.dt * j.report.energy_slack;
            self.pending_junctions.push((j.junction, j.report));
        }
        self.max_violation = self.max_violation.max(sample.max_violation);
        self.max_energy_excess = self.max_energy_excess.max(sample.energy_excess);
        self.max_mass_residual = self.max_mass_residual.max(sample.mass_residual);
        self.pending_steps += 1;
        self.pending_meta = (sample.step + 1, sample.time + sample.dt);
        let due = (sample.step + 1) % self.record_every as u64 == 0;
        if due {
            self.emit(sample.step + 1, sample.time + sample.dt);
            self.totals.push(TotalsRow {
                step: sample.step + 1,
                time: sample.time + sample.dt,
                mass: sample.total_mass,
                energy: sample.total_energy,
                max_violation: sample.max_violation,
            });
        }
    }

    /// Emits any partial window; call once after the last step.
    pub fn flush(&mut self, total_mass: f64, total_energy: f64, max_violation: f64) {
        if self.pending_steps > 0 {
            let (step, time) = self.pending_meta;
            self.emit(step, time);
            self.totals.push(TotalsRow {
                step,
                time,
                mass: total_mass,
                energy: total_energy,
                max_violation,
            });
        }
    }

    fn emit(&mut self, step: u64, time: f64) {
        for slot in 0..self.ends.len() {
            let (pipe, end) = self.ends[slot];
            let acc = std::mem::take(&mut self.acc_ends[slot]);
            let pend = self.pending_ends[slot].clone();
            self.end_rows.push(EndRow {
                step,
                time,
                pipe,
                end_plus: end == End::Plus,
                mass_flux: pend.psi_builtin[0],
                momentum_flux: pend.psi_builtin[1],
                energy_flux: pend.psi_builtin[2],
                psi: pend.psi_extra,
                mass_int: acc.mass,
                momentum_int: acc.momentum,
                energy_int: acc.energy,
                psi_int: acc.psi,
                trace_rho: pend.trace.rho,
                trace_u: pend.trace.u,
            });
            self.acc_ends[slot].psi = vec![0.0; self.generators.len()];
        }
        for &(junction, report) in &self.pending_junctions {
            self.junction_rows.push(JunctionRow {
                step,
                time,
                junction,
                mass_flux_in: report.mass_flux_in,
                mass_flux_out: report.mass_flux_out,
                energy_flux_in: report.energy_flux_in,
                energy_flux_out: report.energy_flux_out,
                hull_flux_in: report.hull_flux_in,
                hull_flux_out: report.hull_flux_out,
                mass_slack: report.mass_slack,
                energy_slack: report.energy_slack,
                mass_slack_int: std::mem::take(&mut self.acc_junction_mass[junction]),
                energy_slack_int: std::mem::take(&mut self.acc_junction_energy[junction]),
            });
        }
        self.pending_steps = 0;
    }
}

/// Closed-book view of a finished run, derivable from the ledger alone.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub steps: u64,
    pub t_final: f64,
    pub times: Vec<f64>,
    pub total_mass: Vec<f64>,
    pub total_energy: Vec<f64>,
    pub mass_ledger_residual: f64,
    pub max_energy_step_excess: f64,
    pub max_invariant_violation: f64,
    pub junction_mass_slack_int: Vec<f64>,
    pub junction_energy_slack_int: Vec<f64>,
    /// (time, distance_ρ, distance_{ρu}) rows when a reference was compared.
    pub l1_to_reference: Option<Vec<(f64, f64, f64)>>,
}

pub fn summarize(ledger: &TraceLedger) -> RunSummary {
    let last = ledger.totals.last();
    RunSummary {
        steps: last.map_or(0, |r| r.step),
        t_final: last.map_or(0.0, |r| r.time),
        times: ledger.totals.iter().map(|r| r.time).collect(),
        total_mass: ledger.totals.iter().map(|r| r.mass).collect(),
        total_energy: ledger.totals.iter().map(|r| r.energy).collect(),
        mass_ledger_residual: ledger.max_mass_residual,
        max_energy_step_excess: ledger.max_energy_excess,
        max_invariant_violation: ledger.max_violation,
        junction_mass_slack_int: ledger.slack_mass_int.clone(),
        junction_energy_slack_int: ledger.slack_energy_int.clone(),
        l1_to_reference: None,
    }
}
