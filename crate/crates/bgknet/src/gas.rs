//! Closed-form kinetic and macroscopic algebra of the isentropic gas model.
//!
//! Macroscopic unknowns are density ρ ≥ 0 and velocity u with pressure law
//! p(ρ) = κρ^γ, 1 < γ < 3. The kinetic unknown is a pair f = (f0, f1) in
//! D = {f0 > 0} ∪ {(0, 0)} whose equilibrium is the vector Maxwellian
//!
//!   M(ρ, u, ξ) = (χ(ρ, ξ−u), ((1−θ)u + θξ) χ(ρ, ξ−u)),
//!   χ(ρ, ξ)    = c_{γ,κ} (a_γ² ρ^{γ−1} − ξ²)₊^λ,
//!
//! with θ = (γ−1)/2, λ = 1/(γ−1) − 1/2, a_γ = 2√(γκ)/(γ−1) and the
//! normalization c_{γ,κ} chosen so ∫ M dξ = (ρ, ρu).

use thiserror::Error;

/// Kinetic values with f0 below this floor are treated as vacuum; avoids
/// catastrophic cancellation in f1/f0 and f1²/f0 terms.
pub const VACUUM_FLOOR: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum GasError {
    #[error("adiabatic exponent gamma must lie in (1, 3), got {0}")]
    InvalidGamma(f64),
    #[error("pressure coefficient kappa must be positive, got {0}")]
    InvalidKappa(f64),
    #[error("{0} is undefined at vacuum")]
    Vacuum(&'static str),
    #[error("kinetic pair outside admissible set D: f0 = {f0}, f1 = {f1}")]
    OutsideD { f0: f64, f1: f64 },
    #[error("{context}: {detail}")]
    Domain { context: &'static str, detail: String },
}

/// Gas constants derived from (γ, κ). All derived fields are pure functions
/// of the two inputs; construct only through [`derive_constants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    pub gamma: f64,
    pub kappa: f64,
    /// θ = (γ−1)/2.
    pub theta: f64,
    /// λ = 1/(γ−1) − 1/2.
    pub lambda: f64,
    /// a_γ = 2√(γκ)/(γ−1); ω2 − ω1 = 2 a_γ ρ^θ.
    pub a_gamma: f64,
    /// J_λ = ∫_{-1}^{1} (1−z²)^λ dz = √π Γ(λ+1)/Γ(λ+3/2).
    pub j_lambda: f64,
    /// c_{γ,κ} = a_γ^{−2/(γ−1)} / J_λ.
    pub c_gamma_kappa: f64,
}

/// Computes the derived constant block from (γ, κ).
pub fn derive_constants(gamma: f64, kappa: f64) -> Result<GasParams, GasError> {
    if !(gamma > 1.0 && gamma < 3.0) || !gamma.is_finite() {
        return Err(GasError::InvalidGamma(gamma));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(GasError::InvalidKappa(kappa));
    }
    let theta = (gamma - 1.0) / 2.0;
    let lambda = 1.0 / (gamma - 1.0) - 0.5;
    let a_gamma = 2.0 * (gamma * kappa).sqrt() / (gamma - 1.0);
    let j_lambda = std::f64::consts::PI.sqrt()
        * (libm::lgamma(lambda + 1.0) - libm::lgamma(lambda + 1.5)).exp();
    let c_gamma_kappa = a_gamma.powf(-2.0 / (gamma - 1.0)) / j_lambda;
    Ok(GasParams {
        gamma,
        kappa,
        theta,
        lambda,
        a_gamma,
        j_lambda,
        c_gamma_kappa,
    })
}

impl GasParams {
    pub fn new(gamma: f64, kappa: f64) -> Result<Self, GasError> {
        derive_constants(gamma, kappa)
    }

    /// t ↦ t^λ with fast paths for the common half-integer exponents.
    #[inline]
    pub(crate) fn pow_lambda(&self, t: f64) -> f64 {
        if self.lambda == 0.5 {
            t.sqrt()
        } else if self.lambda == 1.0 {
            t
        } else if self.lambda == 2.0 {
            t * t
        } else if self.lambda == 1.5 {
            t * t.sqrt()
        } else {
            t.powf(self.lambda)
        }
    }

    /// t ↦ t^{1/λ} for the inverse relations.
    #[inline]
    pub(crate) fn pow_inv_lambda(&self, t: f64) -> f64 {
        if self.lambda == 0.5 {
            t * t
        } else if self.lambda == 1.0 {
            t
        } else if self.lambda == 2.0 {
            t.sqrt()
        } else {
            t.powf(1.0 / self.lambda)
        }
    }
}

/// Kinetic pair (f0, f1) at one velocity node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KineticPair {
    pub f0: f64,
    pub f1: f64,
}

impl KineticPair {
    pub const ZERO: Self = Self { f0: 0.0, f1: 0.0 };

    pub fn new(f0: f64, f1: f64) -> Self {
        Self { f0, f1 }
    }

    /// Membership in D = {f0 > 0} ∪ {(0,0)}, with the vacuum floor applied.
    /// Below the floor, membership is granted inside the cone |f1| ≤ A·f0
    /// (kinetic entropies are continuous at vacuum within such cones, and
    /// linear transport preserves them); a large f1 over a negligible f0 is
    /// rejected as genuinely inadmissible data.
    pub fn in_domain(&self) -> bool {
        if self.f0 >= VACUUM_FLOOR {
            true
        } else {
            self.f0 >= 0.0 && self.f1.abs() <= VACUUM_FLOOR.max(1e3 * self.f0)
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.f0 < VACUUM_FLOOR
    }
}

/// Macroscopic state; vacuum is normalized to u = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroState {
    pub rho: f64,
    pub u: f64,
}

impl MacroState {
    pub const VACUUM: Self = Self { rho: 0.0, u: 0.0 };

    pub fn new(rho: f64, u: f64) -> Self {
        if rho < VACUUM_FLOOR {
            Self::VACUUM
        } else {
            Self { rho, u }
        }
    }

    /// Momentum density ρu.
    pub fn q(&self) -> f64 {
        self.rho * self.u
    }
}

/// Riemann invariant pair ω1 ≤ ω2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannPair {
    pub omega1: f64,
    pub omega2: f64,
}

impl RiemannPair {
    pub fn new(omega1: f64, omega2: f64) -> Self {
        Self { omega1, omega2 }
    }
}

/// χ(ρ, ξ) = c_{γ,κ} (a_γ² ρ^{γ−1} − ξ²)₊^λ.
pub fn chi(params: &GasParams, rho: f64, xi: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let s2 = params.a_gamma * params.a_gamma * rho.powf(params.gamma - 1.0);
    let arg = s2 - xi * xi;
    if arg <= 0.0 {
        0.0
    } else {
        params.c_gamma_kappa * params.pow_lambda(arg)
    }
}

/// Vector Maxwellian M(ρ, u, ξ).
pub fn maxwellian(params: &GasParams, rho: f64, u: f64, xi: f64) -> KineticPair {
    let f0 = chi(params, rho, xi - u);
    if f0 == 0.0 {
        return KineticPair::ZERO;
    }
    let f1 = ((1.0 - params.theta) * u + params.theta * xi) * f0;
    KineticPair { f0, f1 }
}

/// Macroscopic flux F(ρ, u) = (ρu, ρu² + κρ^γ).
pub fn flux(params: &GasParams, state: MacroState) -> (f64, f64) {
    if state.rho <= 0.0 {
        return (0.0, 0.0);
    }
    let q = state.rho * state.u;
    (
        q,
        state.rho * state.u * state.u + params.kappa * state.rho.powf(params.gamma),
    )
}

/// Sound-speed-like half width a_γ ρ^θ of the Maxwellian support.
#[inline]
pub fn support_half_width(params: &GasParams, rho: f64) -> f64 {
    if rho <= 0.0 {
        0.0
    } else {
        params.a_gamma * rho.powf(params.theta)
    }
}

/// Riemann invariants ω_{1,2} = u ∓ a_γ ρ^θ; undefined at vacuum.
pub fn riemann_invariants(params: &GasParams, state: MacroState) -> Result<RiemannPair, GasError> {
    if state.rho < VACUUM_FLOOR {
        return Err(GasError::Vacuum("riemann_invariants"));
    }
    let s = support_half_width(params, state.rho);
    Ok(RiemannPair::new(state.u - s, state.u + s))
}

/// Inverse of [`riemann_invariants`]: u = (ω1+ω2)/2, ρ = ((ω2−ω1)/(2a_γ))^{1/θ}.
pub fn state_from_invariants(
    params: &GasParams,
    omega: RiemannPair,
) -> Result<MacroState, GasError> {
    if !(omega.omega1 < omega.omega2) {
        return Err(GasError::Domain {
            context: "state_from_invariants",
            detail: format!("requires omega1 < omega2, got ({}, {})", omega.omega1, omega.omega2),
        });
    }
    let u = 0.5 * (omega.omega1 + omega.omega2);
    let rho = (0.5 * (omega.omega2 - omega.omega1) / params.a_gamma).powf(1.0 / params.theta);
    Ok(MacroState { rho, u })
}

/// Kinetic-level inverse relations: the (ρ, u) a nonvacuum pair f at node ξ
/// would have as a Maxwellian value.
pub fn invert_kinetic(
    params: &GasParams,
    f: KineticPair,
    xi: f64,
) -> Result<MacroState, GasError> {
    if f.is_vacuum() {
        return Err(GasError::Vacuum("invert_kinetic"));
    }
    let ratio = f.f1 / f.f0;
    let u = (ratio - params.theta * xi) / (1.0 - params.theta);
    let t = (ratio - xi) / (1.0 - params.theta);
    let disc = t * t + params.pow_inv_lambda(f.f0 / params.c_gamma_kappa);
    let rho = params
        .a_gamma
        .powf(-2.0 / (params.gamma - 1.0))
        * disc.powf(1.0 / (params.gamma - 1.0));
    Ok(MacroState { rho, u })
}

/// Q(f): per-node Riemann invariants of a nonvacuum kinetic value.
pub fn q_map(params: &GasParams, f: KineticPair, xi: f64) -> Result<RiemannPair, GasError> {
    if f.is_vacuum() {
        return Err(GasError::Vacuum("q_map"));
    }
    let ratio = f.f1 / f.f0;
    let mid = (ratio - params.theta * xi) / (1.0 - params.theta);
    let t = (ratio - xi) / (1.0 - params.theta);
    let half = (t * t + params.pow_inv_lambda(f.f0 / params.c_gamma_kappa)).sqrt();
    Ok(RiemannPair::new(mid - half, mid + half))
}

/// R(ω): kinetic value at node ξ with invariants ω; (0,0) when ξ ∉ (ω1, ω2).
pub fn r_map(params: &GasParams, omega: RiemannPair, xi: f64) -> KineticPair {
    let mid = 0.5 * (omega.omega1 + omega.omega2);
    let half = 0.5 * (omega.omega2 - omega.omega1);
    let arg = half * half - (xi - mid) * (xi - mid);
    if arg <= 0.0 {
        return KineticPair::ZERO;
    }
    let f0 = params.c_gamma_kappa * params.pow_lambda(arg);
    let f1 = ((1.0 - params.theta) * mid + params.theta * xi) * f0;
    KineticPair { f0, f1 }
}

/// Kinetic energy density H(f, ξ), the kinetic entropy generated by v²/2:
///
///   H = θ/(1−θ)·ξ²/2·f0 + θ/(2c^{1/λ})·f0^{1+1/λ}/(1+1/λ)
///     + 1/(1−θ)·f1²/(2 f0) − θ/(1−θ)·ξ·f1,
///
/// with H(0, ξ) = 0.
pub fn kinetic_energy(params: &GasParams, f: KineticPair, xi: f64) -> Result<f64, GasError> {
    if !f.in_domain() {
        return Err(GasError::OutsideD { f0: f.f0, f1: f.f1 });
    }
    if f.is_vacuum() {
        return Ok(0.0);
    }
    let th = params.theta;
    let one_m = 1.0 - th;
    let inv_lambda = 1.0 / params.lambda;
    let c_pow = params.pow_inv_lambda(params.c_gamma_kappa);
    let bulk = th / (2.0 * c_pow) * f.f0 * params.pow_inv_lambda(f.f0) / (1.0 + inv_lambda);
    Ok(th / one_m * 0.5 * xi * xi * f.f0 + bulk + f.f1 * f.f1 / (2.0 * f.f0 * one_m)
        - th / one_m * xi * f.f1)
}

/// Macroscopic energy η(ρ, u) = ρu²/2 + κ/(γ−1)·ρ^γ.
pub fn macro_energy(params: &GasParams, state: MacroState) -> f64 {
    if state.rho <= 0.0 {
        return 0.0;
    }
    0.5 * state.rho * state.u * state.u
        + params.kappa / (params.gamma - 1.0) * state.rho.powf(params.gamma)
}

/// Macroscopic energy flux G(ρ, u) = ρu³/2 + γκ/(γ−1)·ρ^γ u.
pub fn macro_energy_flux(params: &GasParams, state: MacroState) -> f64 {
    if state.rho <= 0.0 {
        return 0.0;
    }
    0.5 * state.rho * state.u.powi(3)
        + params.gamma * params.kappa / (params.gamma - 1.0)
            * state.rho.powf(params.gamma)
            * state.u
}

/// η'(ρ, ρu) for the energy: (−u²/2 + γκ/(γ−1)·ρ^{γ−1}, u), the exact
/// subdifferential of η in conservative variables.
pub fn energy_subdifferential(params: &GasParams, state: MacroState) -> (f64, f64) {
    let pressure_part = if state.rho <= 0.0 {
        0.0
    } else {
        params.gamma * params.kappa / (params.gamma - 1.0) * state.rho.powf(params.gamma - 1.0)
    };
    (-0.5 * state.u * state.u + pressure_part, state.u)
}
