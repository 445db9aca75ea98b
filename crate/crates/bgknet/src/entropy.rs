//! Kinetic entropy functionals and their dissipation machinery.
//!
//! Every convex generator S yields a kinetic entropy H_S(f, ξ) through an
//! integral kernel Φ supported on the per-node invariant interval, together
//! with a macroscopic pair (η_S, G_S) and a subdifferential vector T_S used
//! in boundary and relaxation estimates. Generators from the polynomial
//! family span{1, v, v²} admit closed forms; those are preferred everywhere
//! because they turn inequality checks into exact arithmetic. Generic
//! generators fall back to quadrature with singularity-absorbing
//! substitutions.

use crate::gas::{
    kinetic_energy, macro_energy, macro_energy_flux, q_map, support_half_width, GasError,
    GasParams, KineticPair, MacroState, RiemannPair,
};
use crate::quad::GaussLegendre;

/// Convex generator S together with the data the estimates need: the
/// derivative, a quadratic growth bound B with |S(v)| ≤ B(1 + v²), and
/// whether S is even (even generators commute with velocity reflection).
#[derive(Debug, Clone, Copy)]
pub enum EntropyGenerator {
    /// S = 1; the mass invariant.
    One,
    /// S = v; the momentum invariant.
    Velocity,
    /// S = v²/2; the physical energy.
    HalfSquare,
    /// S = v².
    Square,
    /// S = a v² + b v + c, convex for a ≥ 0.
    Quadratic { a: f64, b: f64, c: f64 },
    /// S = (v − hi)₊² + (lo − v)₊²; vanishes on [lo, hi] and penalizes
    /// velocity support escaping that interval.
    HullPenalty { lo: f64, hi: f64 },
    /// User-supplied C¹ convex generator.
    Custom {
        s: fn(f64) -> f64,
        ds: fn(f64) -> f64,
        bound: f64,
        symmetric: bool,
    },
}

impl EntropyGenerator {
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Velocity => v,
            Self::HalfSquare => 0.5 * v * v,
            Self::Square => v * v,
            Self::Quadratic { a, b, c } => (a * v + b) * v + c,
            Self::HullPenalty { lo, hi } => {
                let over = (v - hi).max(0.0);
                let under = (lo - v).max(0.0);
                over * over + under * under
            }
            Self::Custom { s, .. } => s(v),
        }
    }

    pub fn deriv(&self, v: f64) -> f64 {
        match self {
            Self::One => 0.0,
            Self::Velocity => 1.0,
            Self::HalfSquare => v,
            Self::Square => 2.0 * v,
            Self::Quadratic { a, b, .. } => 2.0 * a * v + b,
            Self::HullPenalty { lo, hi } => {
                2.0 * (v - hi).max(0.0) - 2.0 * (lo - v).max(0.0)
            }
            Self::Custom { ds, .. } => ds(v),
        }
    }

    /// B with |S(v)| ≤ B(1 + v²) for all v.
    pub fn growth_bound(&self) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Velocity => 0.5,
            Self::HalfSquare => 0.5,
            Self::Square => 1.0,
            Self::Quadratic { a, b, c } => a.abs() + 0.5 * b.abs() + c.abs(),
            Self::HullPenalty { lo, hi } => 2.0 * (1.0 + lo * lo + hi * hi),
            Self::Custom { bound, .. } => *bound,
        }
    }

    /// Whether S(−v) = S(v).
    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::One | Self::HalfSquare | Self::Square => true,
            Self::Velocity => false,
            Self::Quadratic { b, .. } => *b == 0.0,
            Self::HullPenalty { lo, hi } => *lo == -*hi,
            Self::Custom { symmetric, .. } => *symmetric,
        }
    }

    /// Coefficients (a, b, c) when S = a v² + b v + c; the closed-form
    /// evaluators key off this.
    fn poly_coeffs(&self) -> Option<(f64, f64, f64)> {
        match self {
            Self::One => Some((0.0, 0.0, 1.0)),
            Self::Velocity => Some((0.0, 1.0, 0.0)),
            Self::HalfSquare => Some((0.5, 0.0, 0.0)),
            Self::Square => Some((1.0, 0.0, 0.0)),
            Self::Quadratic { a, b, c } => Some((*a, *b, *c)),
            _ => None,
        }
    }
}

/// Υ_μ(z) = ∫₁^z (y² − 1)^μ dy for μ > −1 and z ≥ 1 (0 for z ≤ 1).
///
/// The generic path substitutes y = cosh s, giving ∫₀^L sinh(s)^{2μ+1} ds
/// with L = arccosh z, then s = L t^m with m large enough that the endpoint
/// power t^{m(2μ+2)−1} is at least C¹, which keeps fixed-order quadrature
/// accurate for every μ in range.
pub fn upsilon(mu: f64, z: f64) -> f64 {
    assert!(mu > -1.0, "upsilon requires mu > -1, got {mu}");
    if z <= 1.0 {
        return 0.0;
    }
    if mu == -0.5 {
        return (z + (z * z - 1.0).sqrt()).ln();
    }
    if mu == 0.0 {
        return z - 1.0;
    }
    if mu == 0.5 {
        return 0.5 * (z * (z * z - 1.0).sqrt() - (z + (z * z - 1.0).sqrt()).ln());
    }
    if mu == 1.0 {
        return z * z * z / 3.0 - z + 2.0 / 3.0;
    }
    let big_l = (z + (z * z - 1.0).sqrt()).ln();
    let p = 2.0 * mu + 1.0;
    let m = (2.0 / (p + 1.0)).ceil().max(1.0);
    GaussLegendre::cached(48).integrate(0.0, 1.0, |t| {
        let s = big_l * t.powf(m);
        big_l * m * t.powf(m - 1.0) * s.sinh().powf(p)
    })
}

/// Entropy kernel Φ(ω; ξ, v): nonnegative, symmetric in (ξ, v), supported
/// on the open square (ω1, ω2)², with velocity moments ∫ (1, v) Φ dv equal
/// to the kinetic value R(ω)(ξ). On the diagonal v = ξ the kernel is the
/// finite limit when λ > 1/2 and +∞ (integrable) otherwise.
pub fn kernel_phi(params: &GasParams, omega: RiemannPair, xi: f64, v: f64) -> f64 {
    let (w1, w2) = (omega.omega1, omega.omega2);
    if !(w1 < xi && xi < w2 && w1 < v && v < w2) {
        return 0.0;
    }
    let th = params.theta;
    let pref = (1.0 - th) * (1.0 - th) / th * params.c_gamma_kappa / params.j_lambda;
    let lam = params.lambda;
    let d = (xi - v).abs();
    if d == 0.0 {
        if lam > 0.5 {
            let zd = 2.0 * (xi - w1) * (w2 - xi) / (w2 - w1);
            return pref * zd.powf(2.0 * lam - 1.0) / (2.0 * lam - 1.0);
        }
        return f64::INFINITY;
    }
    let z = ((xi + v) * (w1 + w2) - 2.0 * (w1 * w2 + xi * v)) / ((w2 - w1) * d);
    pref * d.powf(2.0 * lam - 1.0) * upsilon(lam - 1.0, z.max(1.0))
}

/// Kinetic entropy H_S(f, ξ).
///
/// Polynomial generators dispatch to closed forms: the kernel moments give
/// H_1 = f0 and H_v = f1 exactly, and S = v²/2 is [`kinetic_energy`]; the
/// quadratic family follows by linearity. Everything else integrates the
/// kernel.
pub fn kinetic_entropy_s(
    params: &GasParams,
    gen: &EntropyGenerator,
    f: KineticPair,
    xi: f64,
) -> Result<f64, GasError> {
    if !f.in_domain() {
        return Err(GasError::OutsideD { f0: f.f0, f1: f.f1 });
    }
    if f.is_vacuum() {
        return Ok(0.0);
    }
    if let Some((a, b, c)) = gen.poly_coeffs() {
        let h = if a == 0.0 {
            0.0
        } else {
            2.0 * a * kinetic_energy(params, f, xi)?
        };
        return Ok(h + b * f.f1 + c * f.f0);
    }
    h_s_by_quadrature(params, gen, f, xi)
}

/// Generic kernel-quadrature path for H_S; also the reference the unit
/// tests compare the closed forms against.
pub(crate) fn h_s_by_quadrature(
    params: &GasParams,
    gen: &EntropyGenerator,
    f: KineticPair,
    xi: f64,
) -> Result<f64, GasError> {
    if !f.in_domain() {
        return Err(GasError::OutsideD { f0: f.f0, f1: f.f1 });
    }
    if f.is_vacuum() {
        return Ok(0.0);
    }
    let omega = q_map(params, f, xi)?;
    // Exponent choice: toward v = ξ the integrand grows like |ξ−v|^{2λ−1}
    // (worst case), so s = t^m with 2λm − 1 ≥ 1 restores C¹ behavior.
    let m = (1.0 / params.lambda).ceil().max(2.0);
    let gl = GaussLegendre::cached(96);
    let mut total = 0.0;
    for (lo, hi) in [(omega.omega1, xi), (xi, omega.omega2)] {
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        // v runs from the diagonal end ξ toward the outer edge as t: 0 → 1.
        let diag = if lo == xi { lo } else { hi };
        let sign = if lo == xi { 1.0 } else { -1.0 };
        total += gl.integrate(0.0, 1.0, |t| {
            let tm = t.powf(m);
            let v = diag + sign * len * tm;
            // The offset can underflow against ξ for steep substitutions;
            // the true contribution there is O(t^{2λm−1}) → 0.
            if v == xi {
                return 0.0;
            }
            let sv = gen.eval(v);
            // Hull-penalty generators vanish identically on in-hull data;
            // skip the kernel in that common case.
            if sv == 0.0 {
                return 0.0;
            }
            let jac = len * m * t.powf(m - 1.0);
            jac * kernel_phi(params, omega, xi, v) * sv
        });
    }
    Ok(total)
}

/// ∫_a^b (1 − z²)^λ g(z) dz on [−1, 1] subintervals. The substitution
/// z = sin φ turns the endpoint weight into cos^{2λ+1} φ, smooth enough at
/// ±π/2 for fixed-order quadrature at every admissible λ.
pub(crate) fn weighted_z_integral(
    params: &GasParams,
    a: f64,
    b: f64,
    g: impl Fn(f64) -> f64,
) -> f64 {
    let lo = a.clamp(-1.0, 1.0).asin();
    let hi = b.clamp(-1.0, 1.0).asin();
    if !(lo < hi) {
        return 0.0;
    }
    GaussLegendre::cached(96).integrate(lo, hi, |phi| {
        let c = phi.cos();
        c * params.pow_lambda(c * c) * g(phi.sin())
    })
}

/// Macroscopic entropy pair (η_S, G_S):
///
///   η_S = (ρ/J_λ) ∫ (1−z²)^λ S(u + sz) dz,
///   G_S = (ρ/J_λ) ∫ (1−z²)^λ (u + θsz) S(u + sz) dz,   s = a_γ ρ^θ.
///
/// Polynomial generators use closed forms; S = v²/2 recovers the physical
/// energy pair and S = v the momentum flux pair.
pub fn entropy_pair(params: &GasParams, gen: &EntropyGenerator, state: MacroState) -> (f64, f64) {
    if state.rho <= 0.0 {
        return (0.0, 0.0);
    }
    if let Some((a, b, c)) = gen.poly_coeffs() {
        let q = state.rho * state.u;
        let energy = macro_energy(params, state);
        let energy_flux = macro_energy_flux(params, state);
        let momentum_flux = state.rho * state.u * state.u
            + params.kappa * state.rho.powf(params.gamma);
        return (
            2.0 * a * energy + b * q + c * state.rho,
            2.0 * a * energy_flux + b * momentum_flux + c * q,
        );
    }
    let s = support_half_width(params, state.rho);
    let scale = state.rho / params.j_lambda;
    let eta = scale * weighted_z_integral(params, -1.0, 1.0, |z| gen.eval(state.u + s * z));
    let flux = scale
        * weighted_z_integral(params, -1.0, 1.0, |z| {
            (state.u + params.theta * s * z) * gen.eval(state.u + s * z)
        });
    (eta, flux)
}

/// Subdifferential vector T_S(ρ, u) of η_S in the conservative variables
/// (ρ, ρu):
///
///   T_S = (1/J_λ) ∫ (1−z²)^λ ( S(V) + (θsz − u) S′(V), S′(V) ) dz,
///
/// with V = u + sz. Satisfies H_S(f, ξ) ≥ H_S(M(ρ,u,ξ), ξ) + T_S · (f − M)
/// pointwise for every f in D, every state, and every ξ.
pub fn subdifferential_t(
    params: &GasParams,
    gen: &EntropyGenerator,
    state: MacroState,
) -> (f64, f64) {
    if let Some((a, b, c)) = gen.poly_coeffs() {
        // Linearity in S; the v²/2 entry is the energy subdifferential.
        let (e_rho, e_q) = crate::gas::energy_subdifferential(params, state);
        return (2.0 * a * e_rho + c, 2.0 * a * e_q + b);
    }
    let s = support_half_width(params, state.rho);
    let (u, j) = (state.u, params.j_lambda);
    let t_rho = weighted_z_integral(params, -1.0, 1.0, |z| {
        let v = u + s * z;
        gen.eval(v) + (params.theta * s * z - u) * gen.deriv(v)
    }) / j;
    let t_q = weighted_z_integral(params, -1.0, 1.0, |z| gen.deriv(u + s * z)) / j;
    (t_rho, t_q)
}
