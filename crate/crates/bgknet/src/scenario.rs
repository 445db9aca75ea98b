//! Scenario files: a strict JSON schema describing gas, grids, pipes,
//! junction couplings, and run controls, parsed into a validated bundle
//! ready to simulate.
//!
//! Unknown keys are hard errors and every message is path-qualified, so a
//! typo in a nested coupling block names the exact field that broke.

use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use crate::coupling::{CouplingSpec, Schedule};
use crate::gas::{derive_constants, GasParams};
use crate::network::{
    field_from_blocks, validate_topology, Attachment, BlockInit, JunctionSpec, NetworkError,
    NetworkTopology, SimulationConfig,
};
use crate::pipe::{End, KineticField, PipeGrid};
use crate::velocity::VelocityGrid;

#[derive(Debug, Error)]
pub enum ScenarioError {
    /// Structural failure: bad JSON, unknown key, wrong type. The path
    /// points at the offending field.
    #[error("scenario parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    /// Schema parsed but the contents are inconsistent.
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

// ---------------------------------------------------------------------------
// Wire format. Everything below mirrors the JSON schema one-to-one and is
// strict: unknown keys anywhere are rejected.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    gas: GasSection,
    velocity_grid: GridSection,
    hull: HullSection,
    pipes: Vec<PipeSection>,
    junctions: Vec<JunctionSection>,
    epsilon: EpsilonSection,
    t_end: f64,
    cfl: f64,
    #[serde(default = "default_record_every")]
    record_every: usize,
    #[serde(default)]
    output: Option<String>,
}

fn default_record_every() -> usize {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GasSection {
    gamma: f64,
    kappa: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    bound: f64,
    nodes: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HullSection {
    omega_min: f64,
    omega_max: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PipeSection {
    x_min: f64,
    x_max: f64,
    cells: usize,
    area: f64,
    #[serde(default)]
    blocks: Vec<BlockSection>,
    #[serde(default)]
    random_blocks: Option<RandomBlocksSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockSection {
    x_end: f64,
    rho: f64,
    u: f64,
}

/// Seeded piecewise-constant initial data: `count` equal-width blocks with
/// densities and velocities drawn uniformly from the given ranges.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomBlocksSection {
    count: usize,
    rho: [f64; 2],
    u: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JunctionSection {
    attachments: Vec<AttachmentSection>,
    coupling: CouplingSection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttachmentSection {
    pipe: usize,
    end: EndName,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum EndName {
    Minus,
    Plus,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum CouplingSection {
    Linear { matrix: Vec<Vec<f64>> },
    MaxwellianProjection { inner: Box<CouplingSection> },
    SolidWallReflect,
    SolidWallMaxwellian,
    MaxwellianInflow { rho: ScheduleSection, u: ScheduleSection },
    Convolution { blocks: Vec<Vec<f64>> },
    FreeOutflow,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScheduleSection {
    Constant(f64),
    Table(ScheduleTable),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleTable {
    times: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EpsilonSection {
    One(f64),
    Sweep(Vec<f64>),
}

// ---------------------------------------------------------------------------
// Validated bundle.

/// How one pipe's initial data is produced.
#[derive(Debug, Clone)]
pub enum PipeInit {
    Blocks(Vec<BlockInit>),
    Random { count: usize, rho: [f64; 2], u: [f64; 2] },
}

/// A parsed, cross-validated scenario: topology plus run controls.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: GasParams,
    pub vgrid: VelocityGrid,
    pub topology: NetworkTopology,
    pub inits: Vec<PipeInit>,
    /// Sweep values, in file order; a scalar `epsilon` yields one entry.
    pub epsilons: Vec<f64>,
    pub t_end: f64,
    pub cfl: f64,
    pub record_every: usize,
    pub output: Option<PathBuf>,
    /// Non-fatal topology advisories (e.g. very short pipes).
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn config(&self, epsilon: f64) -> SimulationConfig {
        SimulationConfig {
            epsilon,
            t_end: self.t_end,
            cfl: self.cfl,
            record_every: self.record_every,
        }
    }

    /// Resolves every pipe's initial data to a concrete block table.
    /// Randomized blocks draw from a stream seeded only by `seed`, so equal
    /// seeds give bit-equal tables (and thus bit-equal runs).
    pub fn block_tables(&self, seed: u64) -> Vec<Vec<BlockInit>> {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        self.topology
            .pipes
            .iter()
            .zip(&self.inits)
            .map(|(grid, init)| match init {
                PipeInit::Blocks(blocks) => blocks.clone(),
                PipeInit::Random { count, rho, u } => {
                    let width = (grid.a_plus - grid.a_minus) / *count as f64;
                    (0..*count)
                        .map(|k| BlockInit {
                            x_end: grid.a_minus + (k + 1) as f64 * width,
                            rho: rng.gen_range(rho[0]..=rho[1]),
                            u: rng.gen_range(u[0]..=u[1]),
                        })
                        .collect()
                }
            })
            .collect()
    }

    /// Builds every pipe's initial kinetic field from [`Self::block_tables`].
    pub fn initial_fields(&self, epsilon: f64, seed: u64) -> Result<Vec<KineticField>, NetworkError> {
        self.block_tables(seed)
            .iter()
            .zip(&self.topology.pipes)
            .map(|(blocks, grid)| field_from_blocks(&self.params, &self.vgrid, grid, blocks, epsilon))
            .collect()
    }
}

fn schedule(section: ScheduleSection, path: &str, errors: &mut Vec<String>) -> Schedule {
    match section {
        ScheduleSection::Constant(v) => {
            if !v.is_finite() {
                errors.push(format!("{path}: schedule value must be finite"));
            }
            Schedule::Constant(v)
        }
        ScheduleSection::Table(t) => {
            if t.times.len() != t.values.len() || t.times.is_empty() {
                errors.push(format!(
                    "{path}: schedule needs equal, nonempty times/values (got {} and {})",
                    t.times.len(),
                    t.values.len()
                ));
            }
            if t.times.windows(2).any(|w| !(w[0] < w[1])) {
                errors.push(format!("{path}: schedule times must be strictly increasing"));
            }
            Schedule::PiecewiseLinear { times: t.times, values: t.values }
        }
    }
}

fn coupling(section: CouplingSection, path: &str, errors: &mut Vec<String>) -> CouplingSpec {
    match section {
        CouplingSection::Linear { matrix } => CouplingSpec::LinearMatrix { c: matrix },
        CouplingSection::MaxwellianProjection { inner } => CouplingSpec::MaxwellianProjection {
            inner: Box::new(coupling(*inner, &format!("{path}.inner"), errors)),
        },
        CouplingSection::SolidWallReflect => CouplingSpec::SolidWallReflect,
        CouplingSection::SolidWallMaxwellian => CouplingSpec::SolidWallMaxwellian,
        CouplingSection::MaxwellianInflow { rho, u } => CouplingSpec::MaxwellianInflow {
            rho_b: schedule(rho, &format!("{path}.rho"), errors),
            u_b: schedule(u, &format!("{path}.u"), errors),
        },
        CouplingSection::Convolution { blocks } => CouplingSpec::ConvolutionKernel { blocks },
        CouplingSection::FreeOutflow => CouplingSpec::FreeOutflow,
    }
}

/// Parses and fully validates scenario text. Every failure mode is an
/// error: unknown keys, unparseable values, inconsistent physics, broken
/// topology.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ScenarioFile =
        serde_path_to_error::deserialize(&mut de).map_err(|e| ScenarioError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;

    let mut errors = Vec::new();

    let params = match derive_constants(file.gas.gamma, file.gas.kappa) {
        Ok(p) => Some(p),
        Err(e) => {
            errors.push(format!("gas: {e}"));
            None
        }
    };
    let vgrid = match VelocityGrid::symmetric(file.velocity_grid.bound, file.velocity_grid.nodes) {
        Ok(g) => Some(g),
        Err(e) => {
            errors.push(format!("velocity_grid: {e}"));
            None
        }
    };

    if !(file.hull.omega_min < file.hull.omega_max) {
        errors.push(format!(
            "hull: omega_min {} must be below omega_max {}",
            file.hull.omega_min, file.hull.omega_max
        ));
    }

    let mut pipes = Vec::new();
    let mut inits = Vec::new();
    for (i, p) in file.pipes.iter().enumerate() {
        match PipeGrid::new(p.x_min, p.x_max, p.cells, p.area) {
            Ok(g) => pipes.push(g),
            Err(e) => errors.push(format!("pipes[{i}]: {e}")),
        }
        match (&p.blocks[..], &p.random_blocks) {
            ([], None) => errors.push(format!("pipes[{i}]: needs blocks or random_blocks")),
            ([], Some(r)) => {
                if r.count == 0 {
                    errors.push(format!("pipes[{i}].random_blocks: count must be positive"));
                }
                if !(r.rho[0] > 0.0 && r.rho[0] <= r.rho[1] && r.rho[1].is_finite()) {
                    errors.push(format!(
                        "pipes[{i}].random_blocks: rho range must be positive and ordered"
                    ));
                }
                if !(r.u[0] <= r.u[1]) || !r.u[0].is_finite() || !r.u[1].is_finite() {
                    errors.push(format!("pipes[{i}].random_blocks: u range must be ordered"));
                }
                inits.push(PipeInit::Random { count: r.count, rho: r.rho, u: r.u });
            }
            (blocks, None) => {
                for (k, b) in blocks.iter().enumerate() {
                    if !(b.rho >= 0.0) || !b.rho.is_finite() || !b.u.is_finite() {
                        errors.push(format!(
                            "pipes[{i}].blocks[{k}]: rho must be finite and nonnegative, u finite"
                        ));
                    }
                }
                if blocks.windows(2).any(|w| !(w[0].x_end < w[1].x_end)) {
                    errors.push(format!("pipes[{i}].blocks: x_end must be strictly increasing"));
                }
                inits.push(PipeInit::Blocks(
                    blocks
                        .iter()
                        .map(|b| BlockInit { x_end: b.x_end, rho: b.rho, u: b.u })
                        .collect(),
                ));
            }
            (_, Some(_)) => {
                errors.push(format!("pipes[{i}]: blocks and random_blocks are mutually exclusive"))
            }
        }
    }

    let junctions: Vec<JunctionSpec> = file
        .junctions
        .into_iter()
        .enumerate()
        .map(|(j, section)| JunctionSpec {
            attachments: section
                .attachments
                .into_iter()
                .map(|a| Attachment {
                    pipe: a.pipe,
                    end: match a.end {
                        EndName::Minus => End::Minus,
                        EndName::Plus => End::Plus,
                    },
                })
                .collect(),
            coupling: coupling(section.coupling, &format!("junctions[{j}].coupling"), &mut errors),
        })
        .collect();

    let epsilons = match file.epsilon {
        EpsilonSection::One(e) => vec![e],
        EpsilonSection::Sweep(list) => list,
    };
    if epsilons.is_empty() {
        errors.push("epsilon: sweep list must be nonempty".to_string());
    }
    for (k, e) in epsilons.iter().enumerate() {
        if !(*e > 0.0) || !e.is_finite() {
            errors.push(format!("epsilon: {e} is not a positive finite relaxation time"));
        }
        if epsilons[..k].contains(e) {
            errors.push(format!("epsilon: sweep value {e} repeats; runs would collide"));
        }
    }
    if !(file.t_end >= 0.0) || !file.t_end.is_finite() {
        errors.push(format!("t_end: {} must be finite and nonnegative", file.t_end));
    }
    if !(file.cfl > 0.0 && file.cfl <= 1.0) {
        errors.push(format!("cfl: {} must lie in (0, 1]", file.cfl));
    }
    if file.record_every == 0 {
        errors.push("record_every: must be at least 1".to_string());
    }

    let (params, vgrid) = match (params, vgrid) {
        (Some(p), Some(g)) if errors.is_empty() => (p, g),
        _ => return Err(ScenarioError::Invalid(errors)),
    };

    let topology = NetworkTopology {
        pipes,
        junctions,
        hull: (file.hull.omega_min, file.hull.omega_max),
    };
    let warnings = match validate_topology(&topology, &vgrid) {
        Ok(w) => w,
        Err(NetworkError::Invalid(msgs)) => return Err(ScenarioError::Invalid(msgs)),
        Err(e) => return Err(ScenarioError::Invalid(vec![e.to_string()])),
    };

    Ok(Scenario {
        params,
        vgrid,
        topology,
        inits,
        epsilons,
        t_end: file.t_end,
        cfl: file.cfl,
        record_every: file.record_every,
        output: file.output.map(PathBuf::from),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"{
            "gas": {"gamma": 2.0, "kappa": 1.0},
            "velocity_grid": {"bound": 6.0, "nodes": 32},
            "hull": {"omega_min": -4.0, "omega_max": 4.0},
            "pipes": [
                {"x_min": 0.0, "x_max": 1.0, "cells": 40, "area": 1.0,
                 "blocks": [{"x_end": 0.5, "rho": 1.0, "u": 0.0},
                            {"x_end": 1.0, "rho": 0.25, "u": 0.0}]}
            ],
            "junctions": [
                {"attachments": [{"pipe": 0, "end": "minus"}],
                 "coupling": {"type": "solid_wall_reflect"}},
                {"attachments": [{"pipe": 0, "end": "plus"}],
                 "coupling": {"type": "solid_wall_reflect"}}
            ],
            "epsilon": 0.01,
            "t_end": 0.05,
            "cfl": 0.9
        }"#
        .to_string()
    }

    #[test]
    fn minimal_wall_scenario_parses_and_validates() {
        let s = parse_scenario(&minimal()).unwrap();
        assert_eq!(s.topology.pipes.len(), 1);
        assert_eq!(s.topology.junctions.len(), 2);
        assert_eq!(s.epsilons, vec![0.01]);
        assert_eq!(s.record_every, 1);
        assert!(s.output.is_none());
        let fields = s.initial_fields(0.01, 0).unwrap();
        assert_eq!(fields.len(), 1);
        assert_eq!(fields[0].n_cells(), 40);
    }

    #[test]
    fn unknown_keys_are_named_in_the_error() {
        let text = minimal().replace("\"cells\": 40", "\"cells\": 40, \"cellz\": 7");
        let err = parse_scenario(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cellz"), "{msg}");
        assert!(msg.contains("pipes[0]"), "{msg}");
    }

    #[test]
    fn bad_linear_matrix_is_reported_with_the_violated_sum() {
        let text = minimal().replace(
            r#"{"type": "solid_wall_reflect"}},
                {"attachments": [{"pipe": 0, "end": "plus"}],
                 "coupling": {"type": "solid_wall_reflect"}}"#,
            r#"{"type": "linear", "matrix": [[0.5]]}},
                {"attachments": [{"pipe": 0, "end": "plus"}],
                 "coupling": {"type": "solid_wall_reflect"}}"#,
        );
        let err = parse_scenario(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 0"), "error should name the bad row sum: {msg}");
    }

    #[test]
    fn epsilon_sweep_lists_are_kept_in_order() {
        let text = minimal().replace("\"epsilon\": 0.01", "\"epsilon\": [0.1, 0.01, 0.001]");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.epsilons, vec![0.1, 0.01, 0.001]);
        assert!(parse_scenario(&text.replace("[0.1, 0.01, 0.001]", "[]")).is_err());
    }

    #[test]
    fn random_blocks_are_seed_deterministic() {
        let text = minimal().replace(
            r#""blocks": [{"x_end": 0.5, "rho": 1.0, "u": 0.0},
                            {"x_end": 1.0, "rho": 0.25, "u": 0.0}]"#,
            r#""random_blocks": {"count": 5, "rho": [0.5, 1.5], "u": [-0.2, 0.2]}"#,
        );
        let s = parse_scenario(&text).unwrap();
        let a = s.initial_fields(0.01, 42).unwrap();
        let b = s.initial_fields(0.01, 42).unwrap();
        let c = s.initial_fields(0.01, 43).unwrap();
        assert_eq!(a[0].values(), b[0].values(), "same seed must reproduce bit-identical fields");
        assert_ne!(a[0].values(), c[0].values(), "different seeds should differ");
    }

    #[test]
    fn structural_and_semantic_errors_are_path_qualified() {
        // Wrong type deep in a coupling block.
        let text = minimal().replace(
            r#"{"type": "solid_wall_reflect"}},
                {"attachments": [{"pipe": 0, "end": "plus"}]"#,
            r#"{"type": "maxwellian_inflow", "rho": 1.0, "u": "fast"}},
                {"attachments": [{"pipe": 0, "end": "plus"}]"#,
        );
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { .. }), "{err}");
        assert!(err.to_string().contains("junctions[0].coupling"), "{err}");

        // Semantic: dangling attachment.
        let text = minimal().replace("\"pipe\": 0, \"end\": \"plus\"", "\"pipe\": 3, \"end\": \"plus\"");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("pipe 3"), "{err}");
    }

    #[test]
    fn inflow_schedules_accept_constants_and_tables() {
        let text = minimal().replace(
            r#"{"type": "solid_wall_reflect"}},
                {"attachments": [{"pipe": 0, "end": "plus"}],
                 "coupling": {"type": "solid_wall_reflect"}}"#,
            r#"{"type": "maxwellian_inflow", "rho": 1.0,
                 "u": {"times": [0.0, 1.0], "values": [0.0, 0.5]}}},
                {"attachments": [{"pipe": 0, "end": "plus"}],
                 "coupling": {"type": "free_outflow"}}"#,
        );
        let s = parse_scenario(&text).unwrap();
        match &s.topology.junctions[0].coupling {
            CouplingSpec::MaxwellianInflow { rho_b, u_b } => {
                assert!(matches!(rho_b, Schedule::Constant(v) if *v == 1.0));
                assert!((u_b.eval(0.5) - 0.25).abs() < 1e-15);
            }
            other => panic!("unexpected coupling {other:?}"),
        }
        // Unsorted table times are rejected.
        let bad = text.replace("[0.0, 1.0]", "[1.0, 0.0]");
        assert!(parse_scenario(&bad).is_err());
    }
}
