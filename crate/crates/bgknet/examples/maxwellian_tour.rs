//! Tour of the kinetic building blocks: derived gas constants, discrete
//! Maxwellians and their moments, Riemann-invariant round trips, and the
//! closed-form entropy pairs.
//!
//! Run with `cargo run --example maxwellian_tour`.

use bgknet::entropy::{entropy_pair, EntropyGenerator};
use bgknet::gas::{derive_constants, flux, q_map, support_half_width, MacroState};
use bgknet::velocity::{moments, sample_maxwellian, VelocityGrid};

fn main() {
    println!("derived constants (kappa = 1)");
    println!("{:>8} {:>8} {:>8} {:>8} {:>10}", "gamma", "theta", "lambda", "a", "c");
    for gamma in [1.4, 5.0 / 3.0, 2.0, 2.5] {
        let p = derive_constants(gamma, 1.0).unwrap();
        println!(
            "{:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>10.6}",
            gamma, p.theta, p.lambda, p.a_gamma, p.c_gamma_kappa
        );
    }

    // A Maxwellian sampled on a grid fitted to its support reproduces the
    // macroscopic state and flux through plain quadrature.
    let p = derive_constants(2.0, 1.0).unwrap();
    let state = MacroState::new(0.8, 0.3);
    let s = support_half_width(&p, state.rho);
    let vg = VelocityGrid::new(state.u - 1.1 * s, state.u + 1.1 * s, 128).unwrap();
    let m = sample_maxwellian(&vg, &p, state);
    let back = moments(&vg, &m);
    let (q, f1) = flux(&p, state);
    println!();
    println!("maxwellian with (rho, u) = ({}, {}), support half-width {s:.4}", state.rho, state.u);
    println!("  moments back:   rho = {:.6}, u = {:.6}", back.rho, back.u);
    println!("  exact flux:     ({q:.6}, {f1:.6})");

    // Node-wise invariants of a Maxwellian are the macroscopic invariants:
    // omega = u -+ a rho^theta at every velocity inside the support.
    let k = vg.len() / 2;
    let w = q_map(&p, m[k], vg.node(k)).unwrap();
    println!(
        "  invariants at xi = {:+.3}: ({:+.4}, {:+.4})  [macro: ({:+.4}, {:+.4})]",
        vg.node(k),
        w.omega1,
        w.omega2,
        state.u - p.a_gamma * state.rho.powf(p.theta),
        state.u + p.a_gamma * state.rho.powf(p.theta),
    );

    // Entropy pairs (eta_S, G_S) for the standard generators; S = v^2/2
    // gives the physical energy pair.
    println!();
    println!("entropy pairs at (rho, u) = ({}, {})", state.rho, state.u);
    for (name, gen) in [
        ("1", EntropyGenerator::One),
        ("v", EntropyGenerator::Velocity),
        ("v^2/2", EntropyGenerator::HalfSquare),
        ("v^2", EntropyGenerator::Square),
    ] {
        let (eta, g) = entropy_pair(&p, &gen, state);
        println!("  S = {name:<6} eta_S = {eta:>10.6}   G_S = {g:>10.6}");
    }
}
