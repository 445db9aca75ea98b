//! Every junction operator applied to the same two-pipe trace, with its
//! conservation budget. Shows what each coupling does to mass and energy
//! fluxes before any time stepping is involved.
//!
//! Run with `cargo run --example coupling_catalog`.

use bgknet::coupling::{
    apply_coupling, budget_report, CouplingSpec, EndInput, JunctionInput, Schedule,
};
use bgknet::gas::{derive_constants, maxwellian, GasParams, KineticPair};
use bgknet::pipe::End;
use bgknet::velocity::VelocityGrid;

/// Slightly off-equilibrium trace: a Maxwellian plus a faster, thinner one.
fn trace(p: &GasParams, vg: &VelocityGrid, rho: f64, u: f64) -> Vec<KineticPair> {
    (0..vg.len())
        .map(|k| {
            let xi = vg.node(k);
            let a = maxwellian(p, rho, u, xi);
            let b = maxwellian(p, 0.3 * rho, -0.5 * u, xi);
            KineticPair::new(a.f0 + b.f0, a.f1 + b.f1)
        })
        .collect()
}

fn main() {
    let p = derive_constants(2.0, 1.0).unwrap();
    let vg = VelocityGrid::symmetric(6.0, 64).unwrap();
    let hull = (-4.0, 4.0);
    let input = JunctionInput {
        time: 0.0,
        ends: vec![
            EndInput { trace: trace(&p, &vg, 1.0, 0.4), area: 1.0, end: End::Minus },
            EndInput { trace: trace(&p, &vg, 0.6, -0.2), area: 1.0, end: End::Plus },
        ],
    };

    let mix = 0.25;
    let half = vg.len() / 2;
    let positive: Vec<usize> = (0..vg.len()).filter(|&k| vg.node(k) > 0.0).collect();
    let mut blocks = vec![vec![0.0; half * half]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for (pidx, &k) in positive.iter().enumerate() {
                // Velocity-aligned kernel: the matrix coupling written as a
                // convolution, useful as a template for smeared kernels.
                blocks[i * 2 + j][pidx * half + pidx] =
                    [[mix, 1.0 - mix], [1.0 - mix, mix]][i][j] / (vg.node(k) * vg.weight());
            }
        }
    }

    let two_ended: Vec<(&str, CouplingSpec)> = vec![
        (
            "swap matrix",
            CouplingSpec::LinearMatrix { c: vec![vec![0.0, 1.0], vec![1.0, 0.0]] },
        ),
        (
            "blend matrix",
            CouplingSpec::LinearMatrix {
                c: vec![vec![mix, 1.0 - mix], vec![1.0 - mix, mix]],
            },
        ),
        (
            "projected blend",
            CouplingSpec::MaxwellianProjection {
                inner: Box::new(CouplingSpec::LinearMatrix {
                    c: vec![vec![mix, 1.0 - mix], vec![1.0 - mix, mix]],
                }),
            },
        ),
        ("aligned kernel", CouplingSpec::ConvolutionKernel { blocks }),
        ("free outflow", CouplingSpec::FreeOutflow),
    ];
    println!("two-pipe operators on the same trace pair");
    println!(
        "{:<16} {:>12} {:>12} {:>12} {:>12}",
        "operator", "mass in", "mass out", "energy out", "energy slack"
    );
    for (name, spec) in &two_ended {
        let ghosts = apply_coupling(spec, &p, &vg, &input).unwrap();
        let b = budget_report(&p, &vg, &input, &ghosts, hull);
        println!(
            "{name:<16} {:>12.6} {:>12.6} {:>12.6} {:>12.3e}",
            b.mass_flux_in, b.mass_flux_out, b.energy_flux_out, b.energy_slack
        );
    }

    let one_ended: Vec<(&str, CouplingSpec)> = vec![
        ("reflecting wall", CouplingSpec::SolidWallReflect),
        ("Maxwellian wall", CouplingSpec::SolidWallMaxwellian),
        (
            "inflow",
            CouplingSpec::MaxwellianInflow {
                rho_b: Schedule::Constant(0.8),
                u_b: Schedule::PiecewiseLinear {
                    times: vec![0.0, 1.0],
                    values: vec![0.1, 0.4],
                },
            },
        ),
    ];
    let single = JunctionInput { time: 0.0, ends: vec![input.ends[0].clone()] };
    println!();
    println!("single-pipe closures on the minus-end trace");
    println!(
        "{:<16} {:>12} {:>12} {:>12} {:>12}",
        "operator", "mass in", "mass out", "energy out", "energy slack"
    );
    for (name, spec) in &one_ended {
        let ghosts = apply_coupling(spec, &p, &vg, &single).unwrap();
        let b = budget_report(&p, &vg, &single, &ghosts, hull);
        println!(
            "{name:<16} {:>12.6} {:>12.6} {:>12.6} {:>12.3e}",
            b.mass_flux_in, b.mass_flux_out, b.energy_flux_out, b.energy_slack
        );
    }
    println!();
    println!("walls return the incoming mass exactly; the projection returns");
    println!("the inner operator's mass with no extra energy; inflow ignores");
    println!("the trace entirely, so its budget is whatever the schedule says.");
}
