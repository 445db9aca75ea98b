//! Kinetic boundary layers at a solid wall. Gas streams steadily into a
//! reflecting wall; the time-averaged |rho u| of the wall-side trace is
//! the layer's footprint and shrinks with the relaxation time.
//!
//! Run with `cargo run --release --example wall_boundary_layer`.

use bgknet::coupling::{CouplingSpec, Schedule};
use bgknet::diagnostics::TraceLedger;
use bgknet::gas::{derive_constants, MacroState};
use bgknet::network::{simulate, Attachment, JunctionSpec, NetworkTopology, SimulationConfig};
use bgknet::pipe::{End, KineticField, PipeGrid};
use bgknet::velocity::VelocityGrid;

fn wall_average(wall: &CouplingSpec, epsilon: f64) -> f64 {
    let p = derive_constants(2.0, 1.0).unwrap();
    let vg = VelocityGrid::symmetric(6.0, 48).unwrap();
    let grid = PipeGrid::new(0.0, 2.0, 200, 1.0).unwrap();
    let states = vec![MacroState::new(1.0, -0.5); grid.n_cells];
    let field = KineticField::from_macro_states(&vg, &p, &states, epsilon, true);
    let topo = NetworkTopology {
        pipes: vec![grid],
        junctions: vec![
            JunctionSpec {
                attachments: vec![Attachment { pipe: 0, end: End::Minus }],
                coupling: wall.clone(),
            },
            // Steady Maxwellian supply matching the initial data (the
            // prescribed u is in the plus end's local frame).
            JunctionSpec {
                attachments: vec![Attachment { pipe: 0, end: End::Plus }],
                coupling: CouplingSpec::MaxwellianInflow {
                    rho_b: Schedule::Constant(1.0),
                    u_b: Schedule::Constant(0.5),
                },
            },
        ],
        hull: (-4.0, 4.0),
    };
    let mut ledger = TraceLedger::new(Vec::new(), 1);
    let cfg = SimulationConfig { epsilon, t_end: 2.0, cfl: 0.9, record_every: 1 };
    simulate(&p, &vg, &topo, vec![field], cfg, &mut ledger).unwrap();
    let rows: Vec<f64> = ledger
        .end_rows
        .iter()
        .filter(|r| !r.end_plus)
        .map(|r| (r.trace_rho * r.trace_u).abs())
        .collect();
    rows.iter().sum::<f64>() / rows.len() as f64
}

fn main() {
    println!("gas driven into a wall; time-averaged |rho u| of the wall trace");
    println!("{:>10} {:>16} {:>20}", "epsilon", "reflecting", "resting Maxwellian");
    for epsilon in [1e-1, 1e-2, 1e-3] {
        let reflect = wall_average(&CouplingSpec::SolidWallReflect, epsilon);
        let maxwell = wall_average(&CouplingSpec::SolidWallMaxwellian, epsilon);
        println!("{epsilon:>10.0e} {reflect:>16.6e} {maxwell:>20.6e}");
    }
    println!("both columns vanish with epsilon: the layer is a kinetic effect.");
}
