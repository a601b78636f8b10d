//! Beam-angle relations for the cancellation condition.
//!
//! Beam p runs along the trap axis and beam A is tilted by θ. With equal
//! wavelengths η′A ≃ ηp and ηB = 2ηp, so ηB/ηA = 2/cos θ. A different
//! wavelength for A enters through `wavelength_ratio` = λp/λA.

use crate::error::{Error, Result};

/// Geometry with an explicit wavelength ratio λp/λA (1 for equal beams).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub wavelength_ratio: f64,
}

impl Default for BeamGeometry {
    fn default() -> Self {
        Self { wavelength_ratio: 1.0 }
    }
}

impl BeamGeometry {
    pub fn new(wavelength_ratio: f64) -> Result<Self> {
        if !(wavelength_ratio > 0.0 && wavelength_ratio.is_finite()) {
            return Err(Error::InvalidParams("wavelength ratio must be positive".into()));
        }
        Ok(Self { wavelength_ratio })
    }

    /// ηB/ηA for a tilt θ on the primary axis.
    pub fn ratio_at_angle(&self, theta: f64) -> Result<f64> {
        self.multiaxial_ratio(theta, 0.0)
    }

    /// Tilt that meets the condition on the primary axis.
    pub fn tilt_angle(&self, omega_b: f64, nu: f64) -> Result<f64> {
        if omega_b <= 0.0 {
            return Err(Error::InvalidParams("tilt angle needs ΩB > 0".into()));
        }
        let c = omega_b / (self.wavelength_ratio * (nu + omega_b));
        if c > 1.0 {
            return Err(Error::InvalidParams(format!("no tilt satisfies cos θ = {c}")));
        }
        Ok(c.acos())
    }

    /// ηB/ηA along an axis at θ′ from the trap axis, away from beam A.
    pub fn multiaxial_ratio(&self, theta: f64, theta_prime: f64) -> Result<f64> {
        let c = (theta + theta_prime).cos();
        if c.abs() < 1e-12 {
            return Err(Error::InfiniteRatio(theta + theta_prime));
        }
        Ok(2.0 * theta_prime.cos() / (self.wavelength_ratio * c))
    }

    /// Axis θ′ on which the ratio equals 2ν/ΩB + 2.
    pub fn optimal_axis(&self, theta: f64, omega_b: f64, nu: f64) -> Result<f64> {
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParams("tilt must lie in (0, π/2)".into()));
        }
        let r = self.wavelength_ratio * (omega_b + nu);
        let tp = ((r * theta.cos() - omega_b) / (r * theta.sin())).atan();
        if tp < 0.0 {
            log::warn!("optimal axis θ′ = {tp} rad lies beyond the B-beam direction");
        }
        Ok(tp)
    }
}

pub fn tilt_angle(omega_b: f64, nu: f64) -> Result<f64> {
    BeamGeometry::default().tilt_angle(omega_b, nu)
}

pub fn ratio_at_angle(theta: f64) -> Result<f64> {
    BeamGeometry::default().ratio_at_angle(theta)
}

pub fn multiaxial_ratio(theta: f64, theta_prime: f64) -> Result<f64> {
    BeamGeometry::default().multiaxial_ratio(theta, theta_prime)
}

pub fn optimal_axis(theta: f64, omega_b: f64, nu: f64) -> Result<f64> {
    BeamGeometry::default().optimal_axis(theta, omega_b, nu)
}
