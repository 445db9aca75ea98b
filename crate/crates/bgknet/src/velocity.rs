//! Discrete velocity lattice and moment-matched Maxwellian projection.
//!
//! A uniform midpoint lattice carries the kinetic unknown in ξ. Symmetric
//! grids are built by mirroring the positive half so that reflection
//! ξ → −ξ is an exact index permutation; wall couplings rely on that for
//! bit-exact flux cancellation.

use crate::gas::{maxwellian, GasParams, KineticPair, MacroState, VACUUM_FLOOR};
use crate::quad::NeumaierSum;
use thiserror::Error;

/// Kinetic values indexed by velocity node; every entry must lie in D.
pub type DiscreteKineticState = Vec<KineticPair>;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("velocity grid needs an even node count >= 2, got {0}")]
    BadNodeCount(usize),
    #[error("velocity bound must be positive and finite, got {0}")]
    BadBound(f64),
    #[error("velocity bounds must satisfy lo < 0 < hi, got [{0}, {1}]")]
    BadInterval(f64, f64),
}

/// Uniform midpoint velocity lattice on [lo, hi] with lo < 0 < hi.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    nodes: Vec<f64>,
    flux_weights: Vec<f64>,
    dxi: f64,
    lo: f64,
    hi: f64,
    symmetric: bool,
}

impl VelocityGrid {
    /// Symmetric lattice on [−bound, bound] with an even node count and no
    /// zero node. The negative half is the exact negation of the positive
    /// half, so `nodes[mirror(k)] == -nodes[k]` bitwise.
    pub fn symmetric(bound: f64, n: usize) -> Result<Self, GridError> {
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(GridError::BadBound(bound));
        }
        if n < 2 || n % 2 != 0 {
            return Err(GridError::BadNodeCount(n));
        }
        let half = n / 2;
        let dxi = 2.0 * bound / n as f64;
        let mut nodes = vec![0.0; n];
        for j in 0..half {
            let p = (j as f64 + 0.5) * dxi;
            nodes[half + j] = p;
            nodes[half - 1 - j] = -p;
        }
        let flux_weights = nodes.iter().map(|xi| xi.abs() * dxi).collect();
        Ok(Self {
            nodes,
            flux_weights,
            dxi,
            lo: -bound,
            hi: bound,
            symmetric: true,
        })
    }

    /// General lattice with midpoint nodes lo + (k + 1/2)Δξ. Reflection is
    /// not an index permutation here; wall couplings reject such grids.
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self, GridError> {
        if !(lo < 0.0 && 0.0 < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(GridError::BadInterval(lo, hi));
        }
        if n < 2 {
            return Err(GridError::BadNodeCount(n));
        }
        let dxi = (hi - lo) / n as f64;
        let nodes: Vec<f64> = (0..n).map(|k| lo + (k as f64 + 0.5) * dxi).collect();
        let flux_weights = nodes.iter().map(|xi| xi.abs() * dxi).collect();
        Ok(Self {
            nodes,
            flux_weights,
            dxi,
            lo,
            hi,
            symmetric: false,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    /// Midpoint weight, identical for every node.
    pub fn weight(&self) -> f64 {
        self.dxi
    }

    /// |ξ_k|·Δξ, the weight of the trace measure dμ = |ξ| dξ.
    pub fn flux_weight(&self, k: usize) -> f64 {
        self.flux_weights[k]
    }

    pub fn dxi(&self) -> f64 {
        self.dxi
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Index of the node at −ξ_k; only meaningful on symmetric grids.
    pub fn mirror(&self, k: usize) -> usize {
        self.nodes.len() - 1 - k
    }

    /// Largest node speed; the CFL constraint divides by this.
    pub fn max_speed(&self) -> f64 {
        self.nodes
            .iter()
            .fold(0.0f64, |acc, xi| acc.max(xi.abs()))
    }

    /// Whether [omega_min − Δξ, omega_max + Δξ] fits inside the lattice
    /// bounds, so supports inside the hull stay representable.
    pub fn covers_hull(&self, omega_min: f64, omega_max: f64) -> bool {
        self.lo <= omega_min - self.dxi && omega_max + self.dxi <= self.hi
    }
}

/// Discrete moments (ρ, ρu) = Σ w_k (f0, f1); vacuum-normalized.
pub fn moments(grid: &VelocityGrid, state: &[KineticPair]) -> MacroState {
    let (rho, q) = moments_raw(grid, state);
    if rho < VACUUM_FLOOR {
        MacroState::VACUUM
    } else {
        MacroState { rho, u: q / rho }
    }
}

/// Unnormalized conservative moments (ρ, ρu); ledger-grade compensated sums.
pub fn moments_raw(grid: &VelocityGrid, state: &[KineticPair]) -> (f64, f64) {
    debug_assert_eq!(grid.len(), state.len());
    let mut s0 = NeumaierSum::new();
    let mut s1 = NeumaierSum::new();
    for f in state {
        s0.add(f.f0);
        s1.add(f.f1);
    }
    (grid.weight() * s0.value(), grid.weight() * s1.value())
}

/// Pointwise Maxwellian samples, no moment correction. Midpoint sampling
/// leaves an O(Δξ^{1+λ}) defect concentrated at the support edges.
pub fn sample_maxwellian(
    grid: &VelocityGrid,
    params: &GasParams,
    state: MacroState,
) -> DiscreteKineticState {
    grid.nodes
        .iter()
        .map(|&xi| maxwellian(params, state.rho, state.u, xi))
        .collect()
}

/// Moment-matched discrete Maxwellian: samples with f0 scaled by
/// ρ/(Σ w M0) and f1 shifted by Δq·M0_k/(Σ w M0), Δq the first-moment
/// defect after scaling. Discrete moments then equal (ρ, ρu) to roundoff
/// and every entry stays in D (the shift vanishes where f0 does).
pub fn project_maxwellian(
    grid: &VelocityGrid,
    params: &GasParams,
    state: MacroState,
) -> DiscreteKineticState {
    if state.rho < VACUUM_FLOOR {
        return vec![KineticPair::ZERO; grid.len()];
    }
    let mut samples = sample_maxwellian(grid, params, state);
    let (m0, m1) = moments_raw(grid, &samples);
    if m0 <= 0.0 {
        // Support narrower than a cell: no node sampled it. Concentrate the
        // state on the node nearest u; moments stay exact.
        let k = grid
            .nodes
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - state.u).abs().total_cmp(&(*b - state.u).abs())
            })
            .map(|(k, _)| k)
            .unwrap();
        let mut out = vec![KineticPair::ZERO; grid.len()];
        out[k] = KineticPair::new(state.rho / grid.weight(), state.q() / grid.weight());
        return out;
    }
    let scale = state.rho / m0;
    let dq = state.q() - scale * m1;
    for f in &mut samples {
        let raw_f0 = f.f0;
        f.f0 *= scale;
        f.f1 = scale * f.f1 + dq * raw_f0 / m0;
    }
    samples
}

/// Relative moment defect of raw midpoint sampling: |Σw·M0 − ρ|/ρ and the
/// first-moment analog. Diagnoses grid resolution and support clipping.
pub fn sampling_defect(grid: &VelocityGrid, params: &GasParams, state: MacroState) -> (f64, f64) {
    if state.rho < VACUUM_FLOOR {
        return (0.0, 0.0);
    }
    let samples = sample_maxwellian(grid, params, state);
    let (m0, m1) = moments_raw(grid, &samples);
    (
        (m0 - state.rho).abs() / state.rho,
        (m1 - state.q()).abs() / (1.0 + state.q().abs()),
    )
}
