//! Double-dark-state laser cooling of trapped three-level ions.
//!
//! Units: frequencies and rates in units of the trap frequency ν (default 1),
//! angles in radians. The electronic analysis basis is (−, +, e) with
//! |±⟩ = (|↑⟩ ± |↓⟩)/√2; operators on one ion live on (−, +, e) ⊗ Fock with the
//! electronic index major.

pub mod banded;
pub mod chain;
pub mod error;
pub mod fano;
pub mod geometry;
pub mod liouville;
pub mod model;
pub mod ode;
pub mod operators;
pub mod optimize;
pub mod params;
pub mod raman;
pub mod rates;
pub mod sparse;

pub use error::{Error, Result};
pub use liouville::{
    build_dissipator, build_liouvillian, evolve, mean_phonon, relaxation_rate, steady_state, SteadyStateResult,
    SuperOp,
};
pub use model::{
    build_hamiltonian, condition_ratio, dressed_states, target_steady_state, DressedStates, HamiltonianTerms,
};
pub use operators::{OperatorMatrix, C64};
pub use params::{DecayConvention, HilbertSpace, Level, Scheme, SystemParams};
