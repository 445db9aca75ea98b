//! Relaxation limit on a dam break: sweep the relaxation time and watch
//! the kinetic solution converge to the macroscopic (kinetic-flux-split)
//! reference in L1.
//!
//! Run with `cargo run --release --example riemann_relaxation`.

use bgknet::coupling::CouplingSpec;
use bgknet::diagnostics::{l1_distance, TraceLedger};
use bgknet::gas::{derive_constants, MacroState};
use bgknet::macro_ref::{macro_solve, MacroClosure};
use bgknet::network::{simulate, Attachment, JunctionSpec, NetworkTopology, SimulationConfig};
use bgknet::pipe::{End, KineticField, PipeGrid};
use bgknet::velocity::{moments, VelocityGrid};

fn main() {
    let p = derive_constants(2.0, 1.0).unwrap();
    let vg = VelocityGrid::symmetric(6.0, 64).unwrap();
    let t_end = 0.1;
    let riemann = |grid: &PipeGrid| -> Vec<MacroState> {
        (0..grid.n_cells)
            .map(|i| {
                if grid.x_center(i) < 0.5 {
                    MacroState::new(1.0, 0.0)
                } else {
                    MacroState::new(0.25, 0.0)
                }
            })
            .collect()
    };

    let fine = PipeGrid::new(0.0, 1.0, 1600, 1.0).unwrap();
    let reference = macro_solve(
        &p,
        &vg,
        &fine,
        riemann(&fine),
        t_end,
        0.9,
        MacroClosure::Wall,
        MacroClosure::Wall,
    )
    .unwrap();

    let cells = 200;
    let grid = PipeGrid::new(0.0, 1.0, cells, 1.0).unwrap();
    let wall = |end| JunctionSpec {
        attachments: vec![Attachment { pipe: 0, end }],
        coupling: CouplingSpec::SolidWallReflect,
    };
    println!("dam break at t = {t_end}, {cells} cells vs a {}-cell reference", fine.n_cells);
    println!("{:>10} {:>12} {:>12}", "epsilon", "L1(rho)", "L1(rho u)");
    for epsilon in [1e-1, 3e-2, 1e-2, 3e-3, 1e-3] {
        let field = KineticField::from_macro_states(&vg, &p, &riemann(&grid), epsilon, true);
        let topo = NetworkTopology {
            pipes: vec![grid.clone()],
            junctions: vec![wall(End::Minus), wall(End::Plus)],
            hull: (-3.0, 3.0),
        };
        let mut ledger = TraceLedger::new(Vec::new(), 1_000_000);
        let cfg = SimulationConfig { epsilon, t_end, cfl: 0.9, record_every: 1_000_000 };
        let out = simulate(&p, &vg, &topo, vec![field], cfg, &mut ledger).unwrap();
        let kinetic: Vec<MacroState> =
            (0..cells).map(|i| moments(&vg, out.fields[0].cell(i))).collect();
        let (d_rho, d_q) = l1_distance(&kinetic, grid.dx, &reference, fine.dx).unwrap();
        println!("{epsilon:>10.0e} {d_rho:>12.4e} {d_q:>12.4e}");
    }
}
