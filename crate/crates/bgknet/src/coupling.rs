//! Junction coupling operators: maps from incoming boundary traces to
//! outgoing ghost data, each conserving mass flux and dissipating kinetic
//! entropy at the junction.
//!
//! All operators work in a junction-local frame in which every attached
//! pipe looks like the half-line x > 0: incoming values live on ξ < 0 and
//! outgoing ghosts on ξ > 0. A pipe attached at its minus end is already in
//! that frame; a plus end is reflected in (both components of ξ, f1). The
//! velocity grid must be symmetric for any operator that reflects, so the
//! ξ → −ξ change of variables is an exact index permutation and the
//! junction mass balance telescopes to machine zero.

use crate::gas::{
    kinetic_energy, maxwellian, support_half_width, GasParams, KineticPair, MacroState,
};
use crate::pipe::End;
use crate::quad::NeumaierSum;
use crate::velocity::{DiscreteKineticState, VelocityGrid};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CouplingError {
    #[error("coupling requires a symmetric velocity grid")]
    AsymmetricGrid,
    #[error("coupling expects {expected} attached end(s), got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("linear coupling matrix violates its constraints: {0:?}")]
    LinearConstraint(Vec<String>),
    #[error("convolution kernel violates its constraints: {0:?}")]
    KernelConstraint(Vec<String>),
    #[error("half-flux inversion needs positive mass flux, got {0}")]
    NonpositiveMassFlux(f64),
    #[error("half-flux inversion did not converge; residual ({0}, {1})")]
    SolverFailure(f64, f64),
    #[error("wall density root not representable: target flux {target}, grid maximum {max}")]
    RootNotBracketed { target: f64, max: f64 },
    #[error("trace length {got} does not match grid size {want}")]
    SizeMismatch { got: usize, want: usize },
}

/// Scalar boundary schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    /// Linear interpolation through (times, values); clamped outside.
    PiecewiseLinear { times: Vec<f64>, values: Vec<f64> },
}

impl Schedule {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::PiecewiseLinear { times, values } => {
                if times.is_empty() {
                    return 0.0;
                }
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[times.len() - 1] {
                    return values[values.len() - 1];
                }
                let idx = times.partition_point(|&s| s <= t);
                let (t0, t1) = (times[idx - 1], times[idx]);
                let (v0, v1) = (values[idx - 1], values[idx]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

/// Junction operator catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSpec {
    /// Ψ^i(ξ) = Σ_j c^{ij} (g0^j(−ξ), −g1^j(−ξ)) with c^{ij} ≥ 0,
    /// Σ_j c^{ij} = 1 and Σ_i A^i c^{ij} = A^j.
    LinearMatrix { c: Vec<Vec<f64>> },
    /// Replace each end's inner output by the Maxwellian with the same
    /// discrete outgoing half-flux pair.
    MaxwellianProjection { inner: Box<CouplingSpec> },
    /// Single-pipe mirror: Ψ(ξ) = (g0(−ξ), −g1(−ξ)).
    SolidWallReflect,
    /// Single-pipe resting Maxwellian M(ρ_w, 0, ·) with ρ_w matching the
    /// incoming discrete mass flux.
    SolidWallMaxwellian,
    /// Prescribed boundary state: Ψ(ξ) = M(ρ_b(t), u_b(t), ξ), ignoring
    /// the incoming trace.
    MaxwellianInflow { rho_b: Schedule, u_b: Schedule },
    /// Ψ^i(ξ) = Σ_j Σ_{ξ′<0} |ξ′| w a^{ij}(ξ, ξ′) (g0^j(ξ′), −g1^j(ξ′)).
    /// `blocks[i*d + j]` holds a^{ij} row-major over (outgoing positive
    /// node, incoming mirrored node), each half-grid square.
    ConvolutionKernel { blocks: Vec<Vec<f64>> },
    /// Zero ghost: everything leaves, nothing returns.
    FreeOutflow,
}

impl CouplingSpec {
    /// Number of pipe ends the operator expects; `None` means any.
    pub fn arity(&self) -> Option<usize> {
        match self {
            CouplingSpec::LinearMatrix { c } => Some(c.len()),
            CouplingSpec::MaxwellianProjection { inner } => inner.arity(),
            CouplingSpec::SolidWallReflect
            | CouplingSpec::SolidWallMaxwellian
            | CouplingSpec::MaxwellianInflow { .. } => Some(1),
            CouplingSpec::ConvolutionKernel { blocks } => {
                Some((blocks.len() as f64).sqrt().round() as usize)
            }
            CouplingSpec::FreeOutflow => None,
        }
    }

    /// Whether evaluation reflects velocities (and therefore needs the
    /// symmetric lattice).
    pub fn needs_symmetric_grid(&self) -> bool {
        match self {
            CouplingSpec::MaxwellianInflow { .. } | CouplingSpec::FreeOutflow => false,
            CouplingSpec::MaxwellianProjection { inner } => inner.needs_symmetric_grid(),
            _ => true,
        }
    }

    /// Structural validation against the attached areas and grid.
    pub fn validate(&self, vgrid: &VelocityGrid, areas: &[f64]) -> Result<(), CouplingError> {
        if let Some(d) = self.arity() {
            if areas.len() != d {
                return Err(CouplingError::WrongArity { expected: d, got: areas.len() });
            }
        }
        if self.needs_symmetric_grid() && !vgrid.is_symmetric() {
            return Err(CouplingError::AsymmetricGrid);
        }
        match self {
            CouplingSpec::LinearMatrix { c } => validate_linear(c, areas),
            CouplingSpec::ConvolutionKernel { blocks } => {
                validate_convolution(blocks, vgrid, areas)
            }
            CouplingSpec::MaxwellianProjection { inner } => inner.validate(vgrid, areas),
            _ => Ok(()),
        }
    }
}

/// One attached pipe end as the junction sees it.
#[derive(Debug, Clone)]
pub struct EndInput {
    /// Outgoing trace of the pipe, full-length in the pipe frame.
    pub trace: DiscreteKineticState,
    pub area: f64,
    pub end: End,
}

/// Everything a coupling evaluation consumes.
#[derive(Debug, Clone)]
pub struct JunctionInput {
    pub time: f64,
    pub ends: Vec<EndInput>,
}

/// Junction-side conservation bookkeeping of one evaluation; all fluxes are
/// area-weighted |ξ|-sums in the junction-local frame.
#[derive(Debug, Clone, Copy, Default)]
pub struct BudgetReport {
    pub mass_flux_in: f64,
    pub mass_flux_out: f64,
    pub energy_flux_in: f64,
    pub energy_flux_out: f64,
    /// Fluxes of the hull-penalty entropy; zero on both sides whenever all
    /// values respect the invariant hull.
    pub hull_flux_in: f64,
    pub hull_flux_out: f64,
    /// out − in; ≤ 0 means mass-conservative or dissipative.
    pub mass_slack: f64,
    /// out − in of kinetic energy flux.
    pub energy_slack: f64,
}

/// Reflects a pipe-frame end value into the junction-local frame where the
/// incoming half is ξ < 0. Minus ends are already local.
fn to_local(vgrid: &VelocityGrid, end: End, values: &[KineticPair]) -> DiscreteKineticState {
    let nv = vgrid.len();
    let mut local = vec![KineticPair::ZERO; nv];
    for k in 0..nv {
        if vgrid.node(k) < 0.0 {
            local[k] = match end {
                End::Minus => values[k],
                End::Plus => {
                    let m = values[vgrid.mirror(k)];
                    KineticPair::new(m.f0, -m.f1)
                }
            };
        }
    }
    local
}

/// Maps a junction-local ghost (nonzero on ξ > 0) back to the pipe frame.
fn from_local(vgrid: &VelocityGrid, end: End, local: &[KineticPair]) -> DiscreteKineticState {
    let nv = vgrid.len();
    let mut out = vec![KineticPair::ZERO; nv];
    for k in 0..nv {
        match end {
            End::Minus => {
                if vgrid.node(k) > 0.0 {
                    out[k] = local[k];
                }
            }
            End::Plus => {
                if vgrid.node(k) < 0.0 {
                    let m = local[vgrid.mirror(k)];
                    out[k] = KineticPair::new(m.f0, -m.f1);
                }
            }
        }
    }
    out
}

/// Checks c^{ij} ≥ 0, unit row sums, and area-weighted column sums, each to
/// 1e−12; collects every violated constraint.
pub fn validate_linear(c: &[Vec<f64>], areas: &[f64]) -> Result<(), CouplingError> {
    let d = areas.len();
    let mut violations = Vec::new();
    if c.len() != d || c.iter().any(|row| row.len() != d) {
        violations.push(format!("matrix must be {d}x{d}"));
        return Err(CouplingError::LinearConstraint(violations));
    }
    for (i, row) in c.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v >= 0.0) {
                violations.push(format!("c[{i}][{j}] = {v} is negative"));
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            violations.push(format!("row {i} sums to {sum}, expected 1"));
        }
    }
    for j in 0..d {
        let weighted: f64 = (0..d).map(|i| areas[i] * c[i][j]).sum();
        if (weighted - areas[j]).abs() > 1e-12 * areas[j].max(1.0) {
            violations.push(format!(
                "area-weighted column {j} sums to {weighted}, expected {}",
                areas[j]
            ));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CouplingError::LinearConstraint(violations))
    }
}

/// Checks kernel nonnegativity and the discrete flux-partition constraint
/// Σ_i A^i Σ_{ξ>0} ξ w a^{ij}(ξ, ξ′) = A^j per incoming node, to 1e−10.
pub fn validate_convolution(
    blocks: &[Vec<f64>],
    vgrid: &VelocityGrid,
    areas: &[f64],
) -> Result<(), CouplingError> {
    let d = areas.len();
    let h = vgrid.len() / 2;
    let mut violations = Vec::new();
    if blocks.len() != d * d {
        violations.push(format!("expected {} blocks, got {}", d * d, blocks.len()));
        return Err(CouplingError::KernelConstraint(violations));
    }
    if let Some(b) = blocks.iter().position(|m| m.len() != h * h) {
        violations.push(format!("block {b} is not {h}x{h}"));
        return Err(CouplingError::KernelConstraint(violations));
    }
    let pos: Vec<usize> = (0..vgrid.len()).filter(|&k| vgrid.node(k) > 0.0).collect();
    for (i, block) in blocks.iter().enumerate() {
        if let Some(e) = block.iter().position(|&v| !(v >= 0.0)) {
            violations.push(format!("block {i} entry {e} is negative"));
        }
    }
    for j in 0..d {
        for m in 0..h {
            let mut sum = NeumaierSum::new();
            for i in 0..d {
                let block = &blocks[i * d + j];
                for (p, &k) in pos.iter().enumerate() {
                    sum.add(areas[i] * vgrid.node(k) * vgrid.weight() * block[p * h + m]);
                }
            }
            let got = sum.value();
            if (got - areas[j]).abs() > 1e-10 * areas[j].max(1.0) {
                violations.push(format!(
                    "flux partition for pipe {j}, incoming node {m}: {got} vs {}",
                    areas[j]
                ));
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CouplingError::KernelConstraint(violations))
    }
}

/// Evaluates a coupling; returns per-end ghost data in pipe frame, aligned
/// with `input.ends`.
pub fn apply_coupling(
    spec: &CouplingSpec,
    params: &GasParams,
    vgrid: &VelocityGrid,
    input: &JunctionInput,
) -> Result<Vec<DiscreteKineticState>, CouplingError> {
    let nv = vgrid.len();
    for e in &input.ends {
        if e.trace.len() != nv {
            return Err(CouplingError::SizeMismatch { got: e.trace.len(), want: nv });
        }
    }
    if let Some(d) = spec.arity() {
        if input.ends.len() != d {
            return Err(CouplingError::WrongArity { expected: d, got: input.ends.len() });
        }
    }
    if spec.needs_symmetric_grid() && !vgrid.is_symmetric() {
        return Err(CouplingError::AsymmetricGrid);
    }
    let locals: Vec<DiscreteKineticState> = input
        .ends
        .iter()
        .map(|e| to_local(vgrid, e.end, &e.trace))
        .collect();
    let out_locals = apply_local(spec, params, vgrid, input, &locals)?;
    Ok(input
        .ends
        .iter()
        .zip(&out_locals)
        .map(|(e, g)| from_local(vgrid, e.end, g))
        .collect())
}

/// Core evaluation in the junction-local frame.
fn apply_local(
    spec: &CouplingSpec,
    params: &GasParams,
    vgrid: &VelocityGrid,
    input: &JunctionInput,
    locals: &[DiscreteKineticState],
) -> Result<Vec<DiscreteKineticState>, CouplingError> {
    match spec {
        CouplingSpec::LinearMatrix { c } => Ok(apply_linear_local(c, vgrid, locals)),
        CouplingSpec::SolidWallReflect => {
            Ok(apply_linear_local(&[vec![1.0]], vgrid, locals))
        }
        CouplingSpec::SolidWallMaxwellian => {
            Ok(vec![apply_maxwellian_wall_local(params, vgrid, &locals[0])?])
        }
        CouplingSpec::MaxwellianInflow { rho_b, u_b } => {
            let state = MacroState::new(rho_b.eval(input.time), u_b.eval(input.time));
            Ok(vec![outgoing_maxwellian(params, vgrid, state)])
        }
        CouplingSpec::FreeOutflow => {
            Ok(vec![vec![KineticPair::ZERO; vgrid.len()]; locals.len()])
        }
        CouplingSpec::ConvolutionKernel { blocks } => {
            Ok(apply_convolution_local(blocks, vgrid, locals))
        }
        CouplingSpec::MaxwellianProjection { inner } => {
            let raw = apply_local(inner, params, vgrid, input, locals)?;
            raw.into_iter()
                .map(|g| project_outgoing_half(params, vgrid, &g))
                .collect()
        }
    }
}

/// Linear mix in the local frame: outgoing node ξ takes the c-weighted
/// reflected incoming values at −ξ.
fn apply_linear_local(
    c: &[Vec<f64>],
    vgrid: &VelocityGrid,
    locals: &[DiscreteKineticState],
) -> Vec<DiscreteKineticState> {
    let nv = vgrid.len();
    let d = locals.len();
    let mut out = vec![vec![KineticPair::ZERO; nv]; d];
    for k in 0..nv {
        if vgrid.node(k) <= 0.0 {
            continue;
        }
        let mk = vgrid.mirror(k);
        for (i, ghost) in out.iter_mut().enumerate() {
            let mut f0 = 0.0;
            let mut f1 = 0.0;
            for (j, g) in locals.iter().enumerate() {
                f0 += c[i][j] * g[mk].f0;
                f1 -= c[i][j] * g[mk].f1;
            }
            ghost[k] = KineticPair::new(f0, f1);
        }
    }
    out
}

/// Discrete kernel sum in the local frame.
fn apply_convolution_local(
    blocks: &[Vec<f64>],
    vgrid: &VelocityGrid,
    locals: &[DiscreteKineticState],
) -> Vec<DiscreteKineticState> {
    let nv = vgrid.len();
    let d = locals.len();
    let h = nv / 2;
    let pos: Vec<usize> = (0..nv).filter(|&k| vgrid.node(k) > 0.0).collect();
    let mut out = vec![vec![KineticPair::ZERO; nv]; d];
    for (p, &k) in pos.iter().enumerate() {
        for (i, ghost) in out.iter_mut().enumerate() {
            let mut f0 = NeumaierSum::new();
            let mut f1 = NeumaierSum::new();
            for (j, g) in locals.iter().enumerate() {
                let block = &blocks[i * d + j];
                for m in 0..h {
                    // Incoming node is the mirror of the m-th positive node.
                    let km = vgrid.mirror(pos[m]);
                    let weight = vgrid.flux_weight(km) * block[p * h + m];
                    f0.add(weight * g[km].f0);
                    f1.add(-weight * g[km].f1);
                }
            }
            ghost[k] = KineticPair::new(f0.value(), f1.value());
        }
    }
    out
}

/// Raw Maxwellian samples restricted to the outgoing half-grid.
fn outgoing_maxwellian(
    params: &GasParams,
    vgrid: &VelocityGrid,
    state: MacroState,
) -> DiscreteKineticState {
    (0..vgrid.len())
        .map(|k| {
            if vgrid.node(k) > 0.0 {
                maxwellian(params, state.rho, state.u, vgrid.node(k))
            } else {
                KineticPair::ZERO
            }
        })
        .collect()
}

/// Discrete outgoing half-flux pair Σ_{ξ>0} ξ w (f0, f1).
pub fn half_flux_of(vgrid: &VelocityGrid, values: &[KineticPair]) -> (f64, f64) {
    let mut q0 = NeumaierSum::new();
    let mut q1 = NeumaierSum::new();
    for k in 0..vgrid.len() {
        let xi = vgrid.node(k);
        if xi > 0.0 {
            q0.add(xi * vgrid.weight() * values[k].f0);
            q1.add(xi * vgrid.weight() * values[k].f1);
        }
    }
    (q0.value(), q1.value())
}

/// Discrete incoming flux pair Σ_{ξ<0} |ξ| w (f0, f1) in the local frame.
pub fn incoming_flux_of(vgrid: &VelocityGrid, values: &[KineticPair]) -> (f64, f64) {
    let mut q0 = NeumaierSum::new();
    let mut q1 = NeumaierSum::new();
    for k in 0..vgrid.len() {
        let xi = vgrid.node(k);
        if xi < 0.0 {
            q0.add(-xi * vgrid.weight() * values[k].f0);
            q1.add(-xi * vgrid.weight() * values[k].f1);
        }
    }
    (q0.value(), q1.value())
}

/// Continuous outgoing half-flux of the Maxwellian,
/// (∫₀^∞ ξ M0 dξ, ∫₀^∞ ξ M1 dξ), by weighted quadrature over the support.
pub fn half_flux_continuous(params: &GasParams, state: MacroState) -> (f64, f64) {
    if state.rho <= 0.0 {
        return (0.0, 0.0);
    }
    let s = support_half_width(params, state.rho);
    let z_star = (-state.u / s).max(-1.0);
    if z_star >= 1.0 {
        return (0.0, 0.0);
    }
    let scale = state.rho / params.j_lambda;
    let q0 = scale
        * crate::entropy::weighted_z_integral(params, z_star, 1.0, |z| state.u + s * z);
    let q1 = scale
        * crate::entropy::weighted_z_integral(params, z_star, 1.0, |z| {
            (state.u + s * z) * (state.u + params.theta * s * z)
        });
    (q0, q1)
}

/// Discrete counterpart of [`half_flux_continuous`] on raw node samples.
pub fn half_flux_discrete(
    vgrid: &VelocityGrid,
    params: &GasParams,
    state: MacroState,
) -> (f64, f64) {
    let mut q0 = NeumaierSum::new();
    let mut q1 = NeumaierSum::new();
    for k in 0..vgrid.len() {
        let xi = vgrid.node(k);
        if xi > 0.0 {
            let m = maxwellian(params, state.rho, state.u, xi);
            q0.add(xi * vgrid.weight() * m.f0);
            q1.add(xi * vgrid.weight() * m.f1);
        }
    }
    (q0.value(), q1.value())
}

/// Recovers the Maxwellian state whose continuous outgoing half-flux pair
/// equals `target`; requires target mass flux > 0.
pub fn invert_half_flux(params: &GasParams, target: (f64, f64)) -> Result<MacroState, CouplingError> {
    invert_half_flux_with(params, target, |s| half_flux_continuous(params, s))
}

/// Same inversion against the discrete grid sums, so that ghosts built from
/// the result conserve mass flux grid-exactly.
pub fn invert_half_flux_on_grid(
    vgrid: &VelocityGrid,
    params: &GasParams,
    target: (f64, f64),
) -> Result<MacroState, CouplingError> {
    invert_half_flux_with(params, target, |s| half_flux_discrete(vgrid, params, s))
}

/// Damped Newton in the Riemann-invariant chart (ω1, ω2), falling back to
/// nested bisection driven by the pointwise monotonicity of the support
/// profile in ω1 (decreasing) and ω2 (increasing).
fn invert_half_flux_with(
    params: &GasParams,
    target: (f64, f64),
    flux: impl Fn(MacroState) -> (f64, f64),
) -> Result<MacroState, CouplingError> {
    let (t0, t1) = target;
    if !(t0 > 0.0) {
        return Err(CouplingError::NonpositiveMassFlux(t0));
    }
    let tol0 = 1e-12 * (1.0 + t0.abs());
    let tol1 = 1e-12 * (1.0 + t1.abs());
    let state_of = |w1: f64, w2: f64| -> MacroState {
        let u = 0.5 * (w1 + w2);
        let rho = (0.5 * (w2 - w1) / params.a_gamma).powf(1.0 / params.theta);
        MacroState { rho, u }
    };
    let residual = |w1: f64, w2: f64| -> (f64, f64) {
        let (q0, q1) = flux(state_of(w1, w2));
        (q0 - t0, q1 - t1)
    };

    // Initial guess: velocity from the flux ratio, density from the
    // resting-wall closed form as a floor.
    let u0 = (t1 / t0).clamp(-1e3, 1e3);
    let rho_rest = {
        let lam = params.lambda;
        let denom = params.c_gamma_kappa * params.a_gamma.powf(2.0 * lam + 2.0) / (2.0 * lam + 2.0);
        (t0 / denom).powf(2.0 / (params.gamma + 1.0))
    };
    let rho0 = if u0 > 0.1 { (t0 / u0).max(0.1 * rho_rest) } else { rho_rest }.max(1e-8);
    let s0 = support_half_width(params, rho0);
    let (mut w1, mut w2) = (u0 - s0, (u0 + s0).max(1e-8));

    let mut converged = false;
    for _ in 0..100 {
        let (r0, r1) = residual(w1, w2);
        if r0.abs() <= tol0 && r1.abs() <= tol1 {
            converged = true;
            break;
        }
        let h1 = 1e-7 * (1.0 + w1.abs());
        let h2 = 1e-7 * (1.0 + w2.abs());
        let (a0, a1) = residual(w1 + h1, w2);
        let (b0, b1) = residual(w1, w2 + h2);
        let j00 = (a0 - r0) / h1;
        let j01 = (b0 - r0) / h2;
        let j10 = (a1 - r1) / h1;
        let j11 = (b1 - r1) / h2;
        let det = j00 * j11 - j01 * j10;
        if det.abs() < 1e-300 {
            break;
        }
        let d1 = (r0 * j11 - r1 * j01) / det;
        let d2 = (r1 * j00 - r0 * j10) / det;
        let base = r0.abs() / tol0 + r1.abs() / tol1;
        let mut step = 1.0;
        let mut improved = false;
        while step >= 1e-6 {
            let n1 = w1 - step * d1;
            let mut n2 = w2 - step * d2;
            if n2 <= n1 {
                n2 = n1 + 1e-12 * (1.0 + n1.abs());
            }
            if n2 <= 0.0 {
                n2 = 1e-12;
            }
            let (s0r, s1r) = residual(n1, n2);
            if s0r.abs() / tol0 + s1r.abs() / tol1 < base {
                w1 = n1;
                w2 = n2;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if !converged {
        let (r0, r1) = residual(w1, w2);
        converged = r0.abs() <= tol0 && r1.abs() <= tol1;
    }
    if converged {
        return Ok(state_of(w1, w2));
    }

    // Fallback: for fixed ω2 the mass flux decreases strictly in ω1, so the
    // inner solve brackets cleanly; scan ω2 for a sign change of the
    // momentum-flux mismatch and bisect the outer variable.
    let speed_scale = 1.0 + u0.abs() + support_half_width(params, rho_rest.max(1e-8));
    let inner = |w2: f64| -> Option<f64> {
        let mut lo = w2 - 1e3 * speed_scale; // mass flux here is large
        let mut hi = w2 - 1e-12 * speed_scale; // vanishing density

        let (f_lo, _) = residual(lo, w2);
        if f_lo < 0.0 {
            return None; // even the widest fan cannot carry the target
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let (f_mid, _) = residual(mid, w2);
            if f_mid > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    };
    let mut scan: Vec<(f64, f64)> = Vec::new();
    for step in 0..=60 {
        let w2 = speed_scale * 1e-3 * (1.25f64).powi(step);
        if let Some(w1s) = inner(w2) {
            let (_, r1) = residual(w1s, w2);
            scan.push((w2, r1));
        }
    }
    for pair in scan.windows(2) {
        let (w2a, ra) = pair[0];
        let (w2b, rb) = pair[1];
        if ra == 0.0 || ra.signum() != rb.signum() {
            let (mut lo, mut hi) = if ra < 0.0 { (w2a, w2b) } else { (w2b, w2a) };
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                match inner(mid) {
                    Some(w1s) => {
                        let (_, r1) = residual(w1s, mid);
                        if r1 < 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    None => lo = mid,
                }
            }
            let w2s = 0.5 * (lo + hi);
            if let Some(w1s) = inner(w2s) {
                let (r0, r1) = residual(w1s, w2s);
                if r0.abs() <= 1e3 * tol0 && r1.abs() <= 1e3 * tol1 {
                    return Ok(state_of(w1s, w2s));
                }
                return Err(CouplingError::SolverFailure(r0, r1));
            }
        }
    }
    let (r0, r1) = residual(w1, w2);
    Err(CouplingError::SolverFailure(r0, r1))
}

/// Resting-wall ghost: M(ρ_w, 0, ·) on ξ > 0 with ρ_w bisected so the
/// outgoing discrete mass flux matches the incoming one.
fn apply_maxwellian_wall_local(
    params: &GasParams,
    vgrid: &VelocityGrid,
    local: &[KineticPair],
) -> Result<DiscreteKineticState, CouplingError> {
    let (target, _) = incoming_flux_of(vgrid, local);
    if target <= 0.0 {
        return Ok(vec![KineticPair::ZERO; vgrid.len()]);
    }
    let outflux = |rho: f64| half_flux_discrete(vgrid, params, MacroState { rho, u: 0.0 }).0;
    // Largest density whose support still fits the lattice.
    let (_, hi_bound) = vgrid.bounds();
    let rho_max = (hi_bound / params.a_gamma).powf(1.0 / params.theta);
    if outflux(rho_max) < target {
        return Err(CouplingError::RootNotBracketed { target, max: outflux(rho_max) });
    }
    let (mut lo, mut hi) = (0.0, rho_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if outflux(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * rho_max {
            break;
        }
    }
    let rho_w = 0.5 * (lo + hi);
    Ok(outgoing_maxwellian(params, vgrid, MacroState { rho: rho_w, u: 0.0 }))
}

/// Replaces an outgoing half-grid value by the raw-sampled Maxwellian with
/// the same discrete half-flux pair.
fn project_outgoing_half(
    params: &GasParams,
    vgrid: &VelocityGrid,
    ghost: &[KineticPair],
) -> Result<DiscreteKineticState, CouplingError> {
    let target = half_flux_of(vgrid, ghost);
    if target.0 <= 1e-300 {
        return Ok(vec![KineticPair::ZERO; vgrid.len()]);
    }
    let state = invert_half_flux_on_grid(vgrid, params, target)?;
    Ok(outgoing_maxwellian(params, vgrid, state))
}

/// Convenience dispatchers for the named single-end operators.
pub fn apply_reflection_wall(
    params: &GasParams,
    vgrid: &VelocityGrid,
    input: &JunctionInput,
) -> Result<Vec<DiscreteKineticState>, CouplingError> {
    apply_coupling(&CouplingSpec::SolidWallReflect, params, vgrid, input)
}

pub fn apply_maxwellian_wall(
    params: &GasParams,
    vgrid: &VelocityGrid,
    input: &JunctionInput,
) -> Result<Vec<DiscreteKineticState>, CouplingError> {
    apply_coupling(&CouplingSpec::SolidWallMaxwellian, params, vgrid, input)
}

pub fn apply_maxwellian_inflow(
    params: &GasParams,
    vgrid: &VelocityGrid,
    rho_b: &Schedule,
    u_b: &Schedule,
    input: &JunctionInput,
) -> Result<Vec<DiscreteKineticState>, CouplingError> {
    apply_coupling(
        &CouplingSpec::MaxwellianInflow { rho_b: rho_b.clone(), u_b: u_b.clone() },
        params,
        vgrid,
        input,
    )
}

pub fn apply_maxwellian_projection(
    inner: &CouplingSpec,
    params: &GasParams,
    vgrid: &VelocityGrid,
    input: &JunctionInput,
) -> Result<Vec<DiscreteKineticState>, CouplingError> {
    apply_coupling(
        &CouplingSpec::MaxwellianProjection { inner: Box::new(inner.clone()) },
        params,
        vgrid,
        input,
    )
}

pub fn apply_convolution(
    blocks: &[Vec<f64>],
    params: &GasParams,
    vgrid: &VelocityGrid,
    input: &JunctionInput,
) -> Result<Vec<DiscreteKineticState>, CouplingError> {
    apply_coupling(
        &CouplingSpec::ConvolutionKernel { blocks: blocks.to_vec() },
        params,
        vgrid,
        input,
    )
}

/// Area-weighted junction budgets of one evaluation: ghosts are the pipe-
/// frame outputs aligned with `input.ends`; the hull window (ω_min, ω_max)
/// parametrizes the penalty entropy.
pub fn budget_report(
    params: &GasParams,
    vgrid: &VelocityGrid,
    input: &JunctionInput,
    ghosts: &[DiscreteKineticState],
    hull: (f64, f64),
) -> BudgetReport {
    let penalty = crate::entropy::EntropyGenerator::HullPenalty { lo: hull.0, hi: hull.1 };
    let mut report = BudgetReport::default();
    let mut acc = [NeumaierSum::new(); 6];
    for (e, ghost) in input.ends.iter().zip(ghosts) {
        let local_in = to_local(vgrid, e.end, &e.trace);
        let local_out = to_local_ghost(vgrid, e.end, ghost);
        for k in 0..vgrid.len() {
            let xi = vgrid.node(k);
            let fw = e.area * vgrid.flux_weight(k);
            if xi < 0.0 {
                let f = local_in[k];
                acc[0].add(fw * f.f0);
                acc[1].add(fw * kinetic_energy(params, f, xi).unwrap_or(f64::NAN));
                acc[2].add(
                    fw * crate::entropy::kinetic_entropy_s(params, &penalty, f, xi)
                        .unwrap_or(f64::NAN),
                );
            } else {
                let f = local_out[k];
                acc[3].add(fw * f.f0);
                acc[4].add(fw * kinetic_energy(params, f, xi).unwrap_or(f64::NAN));
                acc[5].add(
                    fw * crate::entropy::kinetic_entropy_s(params, &penalty, f, xi)
                        .unwrap_or(f64::NAN),
                );
            }
        }
    }
    report.mass_flux_in = acc[0].value();
    report.energy_flux_in = acc[1].value();
    report.hull_flux_in = acc[2].value();
    report.mass_flux_out = acc[3].value();
    report.energy_flux_out = acc[4].value();
    report.hull_flux_out = acc[5].value();
    report.mass_slack = report.mass_flux_out - report.mass_flux_in;
    report.energy_slack = report.energy_flux_out - report.energy_flux_in;
    report
}

/// Local view of a pipe-frame ghost: nonzero on local ξ > 0.
fn to_local_ghost(vgrid: &VelocityGrid, end: End, ghost: &[KineticPair]) -> DiscreteKineticState {
    let nv = vgrid.len();
    let mut local = vec![KineticPair::ZERO; nv];
    for k in 0..nv {
        if vgrid.node(k) > 0.0 {
            local[k] = match end {
                End::Minus => ghost[k],
                End::Plus => {
                    let m = ghost[vgrid.mirror(k)];
                    KineticPair::new(m.f0, -m.f1)
                }
            };
        }
    }
    local
}
