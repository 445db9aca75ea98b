//! Discrete-velocity BGK solver for isentropic gas flow on pipe networks.
//!
//! The library integrates a two-component kinetic model whose moments solve
//! the isentropic Euler equations with pressure law p = κρ^γ. Pipes carry a
//! uniform space grid and a shared symmetric velocity lattice; junctions
//! exchange half-space data through coupling operators that conserve mass
//! and dissipate kinetic entropy.
//!
//! Module map:
//! - [`gas`]: closed-form state algebra (Maxwellian, Riemann invariants,
//!   per-node inverse maps, energies).
//! - [`quad`]: Gauss-Legendre quadrature and compensated summation.
//! - [`entropy`]: kinetic entropy functionals, their integral kernel, and
//!   subdifferential machinery for dissipation estimates.
//! - [`velocity`]: the symmetric midpoint velocity lattice and discrete
//!   moment/projection operators.
//! - [`pipe`]: per-pipe fields, transport and relaxation steps, boundary
//!   trace extraction.
//! - [`coupling`]: the junction operator catalog (matrix couplings, walls,
//!   inflow, half-flux inversion, convolution kernels) and budget reports.
//! - [`network`]: topology validation and the coupled time loop.
//! - [`diagnostics`]: trace ledgers, entropy flux sums, invariant-domain
//!   violation measures, grid distances, run summaries.
//! - [`macro_ref`]: first-order kinetic-flux-splitting reference scheme for
//!   the limiting macroscopic system.
//! - [`scenario`]: JSON scenario schema and validation.
//! - [`runner`]: scenario execution and artifact output.

pub mod coupling;
pub mod diagnostics;
pub mod entropy;
pub mod gas;
pub mod macro_ref;
pub mod network;
pub mod pipe;
pub mod quad;
pub mod runner;
pub mod scenario;
pub mod velocity;

#[cfg(test)]
pub(crate) mod tests_util {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
        rng.gen_range(lo..hi)
    }
}
