//! Shared fixtures for the criterion benches.

use darkcool::SystemParams;

/// Single-ion point on the cancellation condition.
pub fn single_ion(n_max: usize) -> SystemParams {
    SystemParams { gamma: 15.0, omega_a: 2.3, omega_b: 1.0, eta_b: 0.1, n_max, ..SystemParams::default() }
        .with_condition_eta_a()
        .expect("ΩB is nonzero")
}
