//! Whole-network invariances: an identity junction must be invisible next
//! to an unsplit pipe, and relabeling pipes must not change any recorded
//! number.

use std::collections::BTreeMap;

use bgknet::coupling::CouplingSpec;
use bgknet::diagnostics::TraceLedger;
use bgknet::entropy::EntropyGenerator;
use bgknet::gas::{derive_constants, GasParams, MacroState};
use bgknet::network::{simulate, Attachment, JunctionSpec, NetworkTopology, SimulationConfig};
use bgknet::pipe::{End, KineticField, PipeGrid};
use bgknet::velocity::{moments, VelocityGrid};

fn gamma2() -> GasParams {
    derive_constants(2.0, 1.0).unwrap()
}

fn wall(pipe: usize, end: End) -> JunctionSpec {
    JunctionSpec {
        attachments: vec![Attachment { pipe, end }],
        coupling: CouplingSpec::SolidWallReflect,
    }
}

fn swap_link(a: Attachment, b: Attachment) -> JunctionSpec {
    JunctionSpec {
        attachments: vec![a, b],
        coupling: CouplingSpec::LinearMatrix { c: vec![vec![0.0, 1.0], vec![1.0, 0.0]] },
    }
}

#[test]
fn identity_junction_matches_one_long_pipe() {
    let p = gamma2();
    let vg = VelocityGrid::symmetric(6.0, 32).unwrap();
    let eps = 1e-2;
    let datum = |x: f64| {
        if x < 0.75 {
            MacroState::new(1.0, 0.1)
        } else {
            MacroState::new(0.6, 0.1)
        }
    };

    let long = PipeGrid::new(0.0, 2.0, 100, 1.0).unwrap();
    let long_states: Vec<MacroState> = (0..100).map(|i| datum(long.x_center(i))).collect();
    let long_field = KineticField::from_macro_states(&vg, &p, &long_states, eps, true);
    let long_topo = NetworkTopology {
        pipes: vec![long],
        junctions: vec![wall(0, End::Minus), wall(0, End::Plus)],
        hull: (-3.2, 3.2),
    };

    let left = PipeGrid::new(0.0, 1.0, 50, 1.0).unwrap();
    let right = PipeGrid::new(1.0, 2.0, 50, 1.0).unwrap();
    let split_fields: Vec<KineticField> = [&left, &right]
        .iter()
        .map(|g| {
            let states: Vec<MacroState> =
                (0..g.n_cells).map(|i| datum(g.x_center(i))).collect();
            KineticField::from_macro_states(&vg, &p, &states, eps, true)
        })
        .collect();
    let split_topo = NetworkTopology {
        pipes: vec![left, right],
        junctions: vec![
            wall(0, End::Minus),
            swap_link(
                Attachment { pipe: 0, end: End::Plus },
                Attachment { pipe: 1, end: End::Minus },
            ),
            wall(1, End::Plus),
        ],
        hull: (-3.2, 3.2),
    };

    let cfg = SimulationConfig { epsilon: eps, t_end: 0.2, cfl: 0.9, record_every: 1 };
    let mut ledger_long = TraceLedger::new(Vec::new(), 1);
    let mut ledger_split = TraceLedger::new(Vec::new(), 1);
    let out_long =
        simulate(&p, &vg, &long_topo, vec![long_field], cfg.clone(), &mut ledger_long).unwrap();
    let out_split =
        simulate(&p, &vg, &split_topo, split_fields, cfg, &mut ledger_split).unwrap();
    assert_eq!(out_long.step, out_split.step);

    // The swap matrix hands each side the other's mirrored-mirrored trace,
    // which is the neighbor value itself; the boundary flux is then the
    // same upwind expression as the interior one, so the runs agree
    // bitwise cell by cell.
    for i in 0..100 {
        let reference = out_long.fields[0].cell(i);
        let (field, j) = if i < 50 {
            (&out_split.fields[0], i)
        } else {
            (&out_split.fields[1], i - 50)
        };
        assert_eq!(reference, field.cell(j), "cell {i} diverged");
    }

    // The coarse version of the same statement: the split run stays within
    // a few cells' worth of mass of the unsplit one in L1.
    let dx = 2.0 / 100.0;
    let initial_mass: f64 = long_states.iter().map(|s| dx * s.rho).sum();
    let mut l1 = 0.0;
    for i in 0..100 {
        let a = moments(&vg, out_long.fields[0].cell(i));
        let (field, j) = if i < 50 {
            (&out_split.fields[0], i)
        } else {
            (&out_split.fields[1], i - 50)
        };
        let b = moments(&vg, field.cell(j));
        l1 += dx * (a.rho - b.rho).abs();
    }
    assert!(l1 <= 5.0 * dx * initial_mass, "L1 gap {l1:e}");
}

/// Ring of three pipes with swap junctions; initial data varies per pipe
/// so every recorded row is distinguishable.
fn ring(order: [usize; 3]) -> (NetworkTopology, Vec<KineticField>, GasParams, VelocityGrid) {
    let p = gamma2();
    let vg = VelocityGrid::symmetric(6.0, 32).unwrap();
    // position[k] = where original pipe k sits in the pipe list.
    let mut position = [0usize; 3];
    for (slot, &original) in order.iter().enumerate() {
        position[original] = slot;
    }
    let mut pipes = vec![PipeGrid::new(0.0, 1.0, 40, 1.0).unwrap(); 3];
    let mut fields: Vec<Option<KineticField>> = vec![None; 3];
    for original in 0..3 {
        let grid = PipeGrid::new(0.0, 1.0, 40, 1.0).unwrap();
        let states: Vec<MacroState> = (0..40)
            .map(|c| {
                let phase =
                    2.0 * std::f64::consts::PI * (grid.x_center(c) + original as f64 / 3.0);
                MacroState::new(0.8 + 0.15 * phase.sin(), 0.15 * phase.cos())
            })
            .collect();
        pipes[position[original]] = grid;
        fields[position[original]] =
            Some(KineticField::from_macro_states(&vg, &p, &states, 1e-2, true));
    }
    let junctions: Vec<JunctionSpec> = (0..3)
        .map(|k| {
            swap_link(
                Attachment { pipe: position[k], end: End::Plus },
                Attachment { pipe: position[(k + 1) % 3], end: End::Minus },
            )
        })
        .collect();
    let topo = NetworkTopology { pipes, junctions, hull: (-3.5, 3.5) };
    (topo, fields.into_iter().map(Option::unwrap).collect(), p, vg)
}

#[test]
fn relabeling_pipes_changes_no_recorded_number() {
    let run = |order: [usize; 3]| -> TraceLedger {
        let (topo, fields, p, vg) = ring(order);
        let mut ledger = TraceLedger::new(vec![EntropyGenerator::Square], 1);
        let cfg = SimulationConfig { epsilon: 1e-2, t_end: 0.15, cfl: 0.9, record_every: 1 };
        simulate(&p, &vg, &topo, fields, cfg, &mut ledger).unwrap();
        ledger
    };
    let base = run([0, 1, 2]);
    let turned = run([2, 0, 1]);
    // position of original pipe k in each run's pipe list.
    let pos_base = [0usize, 1, 2];
    let pos_turned = [1usize, 2, 0];

    let key_of = |pos: &[usize; 3], pipe: usize, step: u64, plus: bool| {
        let original = pos.iter().position(|&s| s == pipe).unwrap();
        (step, original, plus)
    };

    let mut base_rows = BTreeMap::new();
    for row in &base.end_rows {
        base_rows.insert(key_of(&pos_base, row.pipe, row.step, row.end_plus), row);
    }
    assert!(!base_rows.is_empty());
    for row in &turned.end_rows {
        let twin = base_rows[&key_of(&pos_turned, row.pipe, row.step, row.end_plus)];
        for (a, b) in [
            (row.mass_flux, twin.mass_flux),
            (row.momentum_flux, twin.momentum_flux),
            (row.energy_flux, twin.energy_flux),
            (row.mass_int, twin.mass_int),
            (row.momentum_int, twin.momentum_int),
            (row.energy_int, twin.energy_int),
            (row.psi[0], twin.psi[0]),
            (row.psi_int[0], twin.psi_int[0]),
            (row.trace_rho, twin.trace_rho),
            (row.trace_u, twin.trace_u),
        ] {
            assert_eq!(a.to_bits(), b.to_bits(), "end row drifted at step {}", row.step);
        }
    }

    // Junction list order is shared, so junction rows pair up directly.
    assert_eq!(base.junction_rows.len(), turned.junction_rows.len());
    for (a, b) in base.junction_rows.iter().zip(&turned.junction_rows) {
        assert_eq!(a.step, b.step);
        assert_eq!(a.junction, b.junction);
        for (x, y) in [
            (a.mass_flux_in, b.mass_flux_in),
            (a.mass_flux_out, b.mass_flux_out),
            (a.energy_flux_in, b.energy_flux_in),
            (a.energy_flux_out, b.energy_flux_out),
            (a.mass_slack, b.mass_slack),
            (a.energy_slack, b.energy_slack),
        ] {
            assert_eq!(x.to_bits(), y.to_bits(), "junction row drifted at step {}", a.step);
        }
    }

    // Snapshots relabel the same way.
    let mut base_cells = BTreeMap::new();
    for row in &base.snapshots {
        base_cells.insert(
            (row.step, pos_base.iter().position(|&s| s == row.pipe).unwrap(), row.x.to_bits()),
            row,
        );
    }
    for row in &turned.snapshots {
        let twin = base_cells[&(
            row.step,
            pos_turned.iter().position(|&s| s == row.pipe).unwrap(),
            row.x.to_bits(),
        )];
        assert_eq!(row.rho.to_bits(), twin.rho.to_bits());
        assert_eq!(row.q.to_bits(), twin.q.to_bits());
        assert_eq!(row.omega1.to_bits(), twin.omega1.to_bits());
        assert_eq!(row.omega2.to_bits(), twin.omega2.to_bits());
    }

    // Totals sum over pipes in list order; only the summation order moved.
    for (a, b) in base.totals.iter().zip(&turned.totals) {
        assert!((a.mass - b.mass).abs() <= 1e-13 * a.mass.abs());
        assert!((a.energy - b.energy).abs() <= 1e-13 * a.energy.abs());
        assert_eq!(a.max_violation.to_bits(), b.max_violation.to_bits());
    }
}
