//! Discrete-time quantum walk on a ring with two topological domains.
//!
//! The ring carries coin angle `+theta` on sites `[0, n1)` and `-theta` on
//! `[n1, n1 + n2)`, so Majorana bound states sit at the two domain walls. A
//! uniform field `alpha` couples them and drives an oscillation between walls.
//!
//! - [`walker`]: states, coins, the step operator.
//! - [`analytic`]: closed-form bound-state energies and wavefunctions.
//! - [`numeric`]: dense diagonalization oracle and two-level projections.
//! - [`lab`]: time evolution, mismatch, revival period, gate sequences.

pub mod analytic;
pub mod error;
pub mod lab;
pub mod linalg;
pub mod numeric;
pub mod roots;
pub mod serde_util;
pub mod walker;

pub use analytic::{
    approx_bound_energies, approx_bound_energies_flux, bound_state_wavefunction, half_period_steps,
    oscillation_period, solve_bound_energies, solve_ring_bound_energies, ApproxEnergies,
    BoundStateSolution, Boundary, Branch, EnergySign,
};
pub use error::{Error, ErrorKind, Result};
pub use lab::{
    evolve, half_period_transfer, measure_period, mismatch, parse_gates, run_gate_sequence,
    transfer_with_steps, GateOp, MajoranaLabel, Mismatch, MismatchMode, PeakFit, SequenceResult,
    TransferReport,
};
pub use linalg::C64;
pub use numeric::{
    diagonalize_ring, diagonalize_step, extract_majorana_pair, residual_r_prime,
    two_level_decompose, MajoranaTarget, QuasiEnergySpectrum, TwoLevelModel,
};
pub use walker::{
    apply_step, build_step_unitary, coin_matrix, overlap, ring_coin_field, CoinField, RingConfig,
    WalkerState,
};
