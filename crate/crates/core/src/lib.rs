//! Nonlinear modal decoupling of multi-oscillator systems.
//!
//! A nonlinear vector field near a stable equilibrium is expanded to a
//! truncated polynomial jet, diagonalized, and then transformed degree by
//! degree until every oscillatory mode evolves independently. The
//! decoupled modes become real second-order oscillators whose energy
//! functions give a direct stability test.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod decouple;
pub mod energy;
pub mod error;
pub mod modal;
pub mod ninebus;
pub mod oscillator;
pub mod poly;
pub mod power;
pub mod sim;
pub mod synth;
pub mod trig;

pub use decouple::{
    build_smib_target, decouple_step, forward_map, inverse_map, run_decoupling, DecoupleOptions, DecoupleStep,
    DecoupledJet, IntraModalTarget, JacobianUpdate, TargetKind, TransformChain,
};
pub use energy::{assess, cct_sweep, critical_energy, energy_function, find_uep, EnergyFunction, FaultScenario, Verdict};
pub use error::{Error, Result};
pub use modal::{check_resonance, eigendecompose, normalize_basis, to_modal, ModalBasis, Resonance};
pub use num_complex::Complex64;
pub use oscillator::{simplify_undamped, smib_realize, to_real, DecoupledOscillator, ModeScaling};
pub use poly::{compose_truncated, invert_near_identity, monomial_count, Monomial, PolyMap};
pub use power::{build_swing_field, find_equilibrium, make_jet, EquilibriumJet, MachineParams, NetworkParams, PowerSystem};
pub use sim::{compare_targets, error_report, integrate, reconstruct, ErrorReport, Trajectory};
pub use trig::{taylor_trig, TrigField};
