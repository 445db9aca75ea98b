//! First-order finite-volume reference solver for the isentropic gas
//! system on a single pipe. The numerical flux is kinetic flux-vector
//! splitting assembled from half-moments of the same discrete Maxwellian
//! the kinetic solver relaxes toward, so comparisons against it isolate
//! the relaxation error rather than closure mismatch.

use crate::gas::{macro_energy, maxwellian, support_half_width, GasParams, MacroState};
use crate::pipe::PipeGrid;
use crate::quad::NeumaierSum;
use crate::velocity::VelocityGrid;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MacroError {
    #[error("field has {got} cells, grid has {want}")]
    SizeMismatch { got: usize, want: usize },
    #[error("courant number {0} exceeds 1")]
    CflViolation(f64),
    #[error("cell {cell}: wave speeds reach {speed}, grid covers {bound}")]
    SupportExceedsGrid { cell: usize, speed: f64, bound: f64 },
}

/// Far-end closure for the reference solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacroClosure {
    /// Mirror ghost (ρ, −u): zero mass flux through the boundary.
    Wall,
    /// Copy ghost: free outflow.
    Outflow,
}

/// Per-cell macroscopic states on a pipe.
pub type MacroField = Vec<MacroState>;

/// Upwinded interface flux: positive half-moments of the left Maxwellian
/// plus negative half-moments of the right one.
pub fn kfvs_flux(
    params: &GasParams,
    vgrid: &VelocityGrid,
    left: MacroState,
    right: MacroState,
) -> (f64, f64) {
    let (lp0, lp1) = half_moments(params, vgrid, left, 1.0);
    let (rn0, rn1) = half_moments(params, vgrid, right, -1.0);
    (lp0 + rn0, lp1 + rn1)
}

/// Σ_{sign·ξ>0} ξ w M(state, ξ) for both components.
fn half_moments(
    params: &GasParams,
    vgrid: &VelocityGrid,
    state: MacroState,
    sign: f64,
) -> (f64, f64) {
    if state.rho <= 0.0 {
        return (0.0, 0.0);
    }
    let mut q0 = NeumaierSum::new();
    let mut q1 = NeumaierSum::new();
    for k in 0..vgrid.len() {
        let xi = vgrid.node(k);
        if xi * sign > 0.0 {
            let m = maxwellian(params, state.rho, state.u, xi);
            q0.add(xi * vgrid.weight() * m.f0);
            q1.add(xi * vgrid.weight() * m.f1);
        }
    }
    (q0.value(), q1.value())
}

fn ghost_state(closure: MacroClosure, boundary: MacroState) -> MacroState {
    match closure {
        MacroClosure::Wall => MacroState { rho: boundary.rho, u: -boundary.u },
        MacroClosure::Outflow => boundary,
    }
}

/// One conservative update U_i ← U_i − Δt/Δx (F_{i+1/2} − F_{i−1/2}).
pub fn macro_step(
    params: &GasParams,
    vgrid: &VelocityGrid,
    grid: &PipeGrid,
    field: &MacroField,
    dt: f64,
    minus: MacroClosure,
    plus: MacroClosure,
) -> Result<MacroField, MacroError> {
    let n = grid.n_cells;
    if field.len() != n {
        return Err(MacroError::SizeMismatch { got: field.len(), want: n });
    }
    let nu = dt * vgrid.max_speed() / grid.dx;
    if nu > 1.0 + 1e-12 {
        return Err(MacroError::CflViolation(nu));
    }
    let (_, bound) = vgrid.bounds();
    for (i, s) in field.iter().enumerate() {
        let speed = s.u.abs() + support_half_width(params, s.rho);
        if speed > bound {
            return Err(MacroError::SupportExceedsGrid { cell: i, speed, bound });
        }
    }
    // Per-cell half-moments, shared between the two adjacent interfaces.
    let plus_half: Vec<(f64, f64)> =
        field.iter().map(|&s| half_moments(params, vgrid, s, 1.0)).collect();
    let minus_half: Vec<(f64, f64)> =
        field.iter().map(|&s| half_moments(params, vgrid, s, -1.0)).collect();
    let gm = ghost_state(minus, field[0]);
    let gp = ghost_state(plus, field[n - 1]);
    let (gm_p0, gm_p1) = half_moments(params, vgrid, gm, 1.0);
    let (gp_n0, gp_n1) = half_moments(params, vgrid, gp, -1.0);

    // flux[i] is the interface left of cell i; flux[n] the right boundary.
    let mut flux = vec![(0.0, 0.0); n + 1];
    flux[0] = (gm_p0 + minus_half[0].0, gm_p1 + minus_half[0].1);
    for i in 1..n {
        flux[i] = (
            plus_half[i - 1].0 + minus_half[i].0,
            plus_half[i - 1].1 + minus_half[i].1,
        );
    }
    flux[n] = (plus_half[n - 1].0 + gp_n0, plus_half[n - 1].1 + gp_n1);

    let r = dt / grid.dx;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let rho = field[i].rho - r * (flux[i + 1].0 - flux[i].0);
        let q = field[i].rho * field[i].u - r * (flux[i + 1].1 - flux[i].1);
        out.push(MacroState::new(rho.max(0.0), if rho > 0.0 { q / rho } else { 0.0 }));
    }
    Ok(out)
}

/// Δx-weighted totals (mass, momentum, entropy η) of a field.
pub fn macro_totals(params: &GasParams, grid: &PipeGrid, field: &MacroField) -> (f64, f64, f64) {
    let mut mass = NeumaierSum::new();
    let mut mom = NeumaierSum::new();
    let mut eta = NeumaierSum::new();
    for s in field {
        mass.add(grid.dx * s.rho);
        mom.add(grid.dx * s.rho * s.u);
        eta.add(grid.dx * macro_energy(params, *s));
    }
    (mass.value(), mom.value(), eta.value())
}

/// Runs the reference solver from piecewise data to `t_end` with uniform
/// steps at the given Courant number.
pub fn macro_solve(
    params: &GasParams,
    vgrid: &VelocityGrid,
    grid: &PipeGrid,
    initial: MacroField,
    t_end: f64,
    cfl: f64,
    minus: MacroClosure,
    plus: MacroClosure,
) -> Result<MacroField, MacroError> {
    let dt_max = cfl * grid.dx / vgrid.max_speed();
    let steps = (t_end / dt_max).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let mut field = initial;
    for _ in 0..steps {
        field = macro_step(params, vgrid, grid, &field, dt, minus, plus)?;
    }
    Ok(field)
}
