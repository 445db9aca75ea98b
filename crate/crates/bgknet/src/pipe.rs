//! Single-pipe kinetic field evolution: first-order upwind transport plus
//! exact exponential relaxation toward the moment-matched Maxwellian.
//!
//! Transport and relaxation are Lie-split. Upwind updates are per-node
//! convex combinations, so convex pointwise invariants (the admissible set
//! D, per-node invariant hulls, kinetic entropies) survive transport;
//! relaxation mixes with a moment-matched Maxwellian, so cell moments are
//! conserved to roundoff regardless of ε.

use crate::gas::{GasParams, KineticPair, MacroState};
use crate::quad::NeumaierSum;
use crate::velocity::{moments, project_maxwellian, DiscreteKineticState, VelocityGrid};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PipeError {
    #[error("pipe interval must satisfy a_minus < a_plus, got [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("pipe needs at least one cell")]
    NoCells,
    #[error("pipe area must be positive, got {0}")]
    BadArea(f64),
    #[error("cfl number must lie in (0, 1], got {0}")]
    BadCfl(f64),
    #[error("timestep violates the cfl bound: max |xi| dt/dx = {0}")]
    CflViolation(f64),
    #[error("state length {got} does not match grid size {want}")]
    SizeMismatch { got: usize, want: usize },
}

/// Pipe end, oriented along increasing x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum End {
    Minus,
    Plus,
}

impl End {
    /// Sign of outgoing direction: traces leave through ξ < 0 at the minus
    /// end and ξ > 0 at the plus end.
    pub fn outgoing_sign(self) -> f64 {
        match self {
            End::Minus => -1.0,
            End::Plus => 1.0,
        }
    }
}

/// Uniform cell partition of [a_minus, a_plus] with cross-section area.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeGrid {
    pub a_minus: f64,
    pub a_plus: f64,
    pub n_cells: usize,
    pub dx: f64,
    pub area: f64,
}

impl PipeGrid {
    pub fn new(a_minus: f64, a_plus: f64, n_cells: usize, area: f64) -> Result<Self, PipeError> {
        if !(a_minus < a_plus) || !a_minus.is_finite() || !a_plus.is_finite() {
            return Err(PipeError::BadInterval(a_minus, a_plus));
        }
        if n_cells == 0 {
            return Err(PipeError::NoCells);
        }
        if !(area > 0.0) || !area.is_finite() {
            return Err(PipeError::BadArea(area));
        }
        Ok(Self {
            a_minus,
            a_plus,
            n_cells,
            dx: (a_plus - a_minus) / n_cells as f64,
            area,
        })
    }

    /// Cell-center coordinate.
    pub fn x_center(&self, i: usize) -> f64 {
        self.a_minus + (i as f64 + 0.5) * self.dx
    }
}

/// Kinetic unknown on one pipe: cell-major storage of per-node pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticField {
    data: Vec<KineticPair>,
    n_cells: usize,
    n_nodes: usize,
    pub time: f64,
    pub epsilon: f64,
}

impl KineticField {
    pub fn zeros(n_cells: usize, n_nodes: usize, epsilon: f64) -> Self {
        Self {
            data: vec![KineticPair::ZERO; n_cells * n_nodes],
            n_cells,
            n_nodes,
            time: 0.0,
            epsilon,
        }
    }

    /// Field with every cell set to the (optionally moment-matched)
    /// discrete Maxwellian of the given per-cell states.
    pub fn from_macro_states(
        vgrid: &VelocityGrid,
        params: &GasParams,
        states: &[MacroState],
        epsilon: f64,
        moment_matched: bool,
    ) -> Self {
        let n_nodes = vgrid.len();
        let mut field = Self::zeros(states.len(), n_nodes, epsilon);
        for (i, state) in states.iter().enumerate() {
            let cell = if moment_matched {
                project_maxwellian(vgrid, params, *state)
            } else {
                crate::velocity::sample_maxwellian(vgrid, params, *state)
            };
            field.cell_mut(i).copy_from_slice(&cell);
        }
        field
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Flat cell-major view of all per-node values.
    pub fn values(&self) -> &[KineticPair] {
        &self.data
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn cell(&self, i: usize) -> &[KineticPair] {
        &self.data[i * self.n_nodes..(i + 1) * self.n_nodes]
    }

    pub fn cell_mut(&mut self, i: usize) -> &mut [KineticPair] {
        &mut self.data[i * self.n_nodes..(i + 1) * self.n_nodes]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[KineticPair]> {
        self.data.chunks(self.n_nodes)
    }

    /// Total conservative moments (Σ Δx ρ_i, Σ Δx q_i) per unit area.
    pub fn total_moments(&self, vgrid: &VelocityGrid, pipe: &PipeGrid) -> (f64, f64) {
        let mut mass = NeumaierSum::new();
        let mut momentum = NeumaierSum::new();
        for cell in self.cells() {
            let (rho, q) = crate::velocity::moments_raw(vgrid, cell);
            mass.add(rho);
            momentum.add(q);
        }
        (pipe.dx * mass.value(), pipe.dx * momentum.value())
    }

    /// Total kinetic energy Σ_i Δx Σ_k w H(f_{ik}, ξ_k) per unit area;
    /// values outside D contribute NaN rather than being silently skipped.
    pub fn total_energy(&self, params: &GasParams, vgrid: &VelocityGrid, pipe: &PipeGrid) -> f64 {
        let mut acc = NeumaierSum::new();
        for cell in self.cells() {
            for (k, f) in cell.iter().enumerate() {
                acc.add(
                    vgrid.weight()
                        * crate::gas::kinetic_energy(params, *f, vgrid.node(k))
                            .unwrap_or(f64::NAN),
                );
            }
        }
        pipe.dx * acc.value()
    }
}

/// Ghost values feeding the upwind stencil. Full-length per end; only the
/// incoming half (ξ > 0 at minus, ξ < 0 at plus) may be nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostData {
    pub minus: DiscreteKineticState,
    pub plus: DiscreteKineticState,
}

impl GhostData {
    pub fn zero(n_nodes: usize) -> Self {
        Self {
            minus: vec![KineticPair::ZERO; n_nodes],
            plus: vec![KineticPair::ZERO; n_nodes],
        }
    }
}

/// Outgoing boundary values at one end, sampled from the adjacent cell;
/// full-length with the non-outgoing half zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub end: End,
    pub values: DiscreteKineticState,
}

/// Directed boundary fluxes of one transport step at one end, measured on
/// the pre-update data the upwind stencil actually consumed. `mass_*` are
/// |ξ|-weighted f0 sums (nonnegative); `momentum_*` the f1 analogs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EndFluxes {
    pub mass_in: f64,
    pub mass_out: f64,
    pub momentum_in: f64,
    pub momentum_out: f64,
}

/// Per-step transport bookkeeping: mass obeys
/// mass_after = mass_before + Δt·(minus.in + plus.in − minus.out − plus.out)
/// to roundoff, by the telescoping structure of upwind.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TransportRecord {
    pub minus: EndFluxes,
    pub plus: EndFluxes,
}

/// Largest stable timestep: Δt = cfl·Δx / max|ξ_k|.
pub fn cfl_timestep(pipe: &PipeGrid, vgrid: &VelocityGrid, cfl: f64) -> Result<f64, PipeError> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(PipeError::BadCfl(cfl));
    }
    Ok(cfl * pipe.dx / vgrid.max_speed())
}

/// One upwind transport step with ghost inflow; returns the boundary flux
/// record. Sweeps run against the wind so the stencil always reads
/// pre-update neighbor values in place.
pub fn transport_step(
    vgrid: &VelocityGrid,
    pipe: &PipeGrid,
    field: &mut KineticField,
    ghost_minus: &[KineticPair],
    ghost_plus: &[KineticPair],
    dt: f64,
) -> Result<TransportRecord, PipeError> {
    let nv = vgrid.len();
    if ghost_minus.len() != nv {
        return Err(PipeError::SizeMismatch { got: ghost_minus.len(), want: nv });
    }
    if ghost_plus.len() != nv {
        return Err(PipeError::SizeMismatch { got: ghost_plus.len(), want: nv });
    }
    let nu_max = vgrid.max_speed() * dt / pipe.dx;
    if nu_max > 1.0 + 1e-12 {
        return Err(PipeError::CflViolation(nu_max));
    }
    let n = field.n_cells();
    let w = vgrid.weight();
    let mut record = TransportRecord::default();
    let mut acc = [NeumaierSum::new(); 8];
    for k in 0..nv {
        let xi = vgrid.node(k);
        let nu = xi.abs() * dt / pipe.dx;
        let fw = xi.abs() * w;
        if xi > 0.0 {
            let first = field.data[k];
            let last = field.data[(n - 1) * field.n_nodes + k];
            // in at minus from ghost, out at plus from the last cell.
            acc[0].add(fw * ghost_minus[k].f0);
            acc[1].add(fw * ghost_minus[k].f1);
            acc[2].add(fw * last.f0);
            acc[3].add(fw * last.f1);
            let _ = first;
            for i in (0..n).rev() {
                let left = if i == 0 {
                    ghost_minus[k]
                } else {
                    field.data[(i - 1) * field.n_nodes + k]
                };
                let idx = i * field.n_nodes + k;
                let cur = field.data[idx];
                field.data[idx] = KineticPair::new(
                    cur.f0 - nu * (cur.f0 - left.f0),
                    cur.f1 - nu * (cur.f1 - left.f1),
                );
            }
        } else {
            let first = field.data[k];
            // in at plus from ghost, out at minus from the first cell.
            acc[4].add(fw * ghost_plus[k].f0);
            acc[5].add(fw * ghost_plus[k].f1);
            acc[6].add(fw * first.f0);
            acc[7].add(fw * first.f1);
            for i in 0..n {
                let right = if i == n - 1 {
                    ghost_plus[k]
                } else {
                    field.data[(i + 1) * field.n_nodes + k]
                };
                let idx = i * field.n_nodes + k;
                let cur = field.data[idx];
                field.data[idx] = KineticPair::new(
                    cur.f0 - nu * (cur.f0 - right.f0),
                    cur.f1 - nu * (cur.f1 - right.f1),
                );
            }
        }
    }
    record.minus.mass_in = acc[0].value();
    record.minus.momentum_in = acc[1].value();
    record.plus.mass_out = acc[2].value();
    record.plus.momentum_out = acc[3].value();
    record.plus.mass_in = acc[4].value();
    record.plus.momentum_in = acc[5].value();
    record.minus.mass_out = acc[6].value();
    record.minus.momentum_out = acc[7].value();
    Ok(record)
}

/// One relaxation step: f′ = M̂ + (f − M̂)·e^{−Δt/ε} per cell, with M̂ the
/// moment-matched discrete Maxwellian of the cell's own moments. Exact for
/// the relaxation subsystem at any ε; ε = 0 degenerates to projection.
pub fn relax_step(
    params: &GasParams,
    vgrid: &VelocityGrid,
    field: &mut KineticField,
    dt: f64,
) {
    let decay = if field.epsilon > 0.0 {
        (-dt / field.epsilon).exp()
    } else {
        0.0
    };
    for i in 0..field.n_cells() {
        let state = moments(vgrid, field.cell(i));
        let m = project_maxwellian(vgrid, params, state);
        for (f, m_k) in field.cell_mut(i).iter_mut().zip(&m) {
            f.f0 = m_k.f0 + (f.f0 - m_k.f0) * decay;
            f.f1 = m_k.f1 + (f.f1 - m_k.f1) * decay;
        }
    }
}

/// Outgoing boundary values: first cell on ξ < 0 and last cell on ξ > 0.
pub fn extract_traces(vgrid: &VelocityGrid, field: &KineticField) -> (BoundaryTrace, BoundaryTrace) {
    let nv = vgrid.len();
    let mut minus = vec![KineticPair::ZERO; nv];
    let mut plus = vec![KineticPair::ZERO; nv];
    let first = field.cell(0);
    let last = field.cell(field.n_cells() - 1);
    for k in 0..nv {
        if vgrid.node(k) < 0.0 {
            minus[k] = first[k];
        } else {
            plus[k] = last[k];
        }
    }
    (
        BoundaryTrace { end: End::Minus, values: minus },
        BoundaryTrace { end: End::Plus, values: plus },
    )
}
