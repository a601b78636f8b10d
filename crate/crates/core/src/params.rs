//! Physical parameters of the single-ion scheme and the truncated Hilbert space.
//!
//! Frequencies are in units of the trap frequency ν. The excited state decays
//! into |↑⟩ and |↓⟩; how `gamma` maps onto the Lindblad coefficients is set by
//! [`DecayConvention`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Second moment factor of the dipole pattern W(s) = ¾(1+s²):
/// (1/2)∫ s² W(s) ds over [−1, 1].
pub const RECOIL_ALPHA: f64 = 0.4;

/// Lamb-Dicke values above this only warn.
pub const LAMB_DICKE_WARN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Both couplings with their motional terms.
    Robust,
    /// Drops the ground-state coupling B entirely.
    Eit,
    /// Keeps only the carrier of coupling A.
    Ssh,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Robust => "robust",
            Scheme::Eit => "eit",
            Scheme::Ssh => "ssh",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "robust" => Ok(Scheme::Robust),
            "eit" => Ok(Scheme::Eit),
            "ssh" => Ok(Scheme::Ssh),
            other => Err(Error::UnknownScheme(other.to_string())),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the decay coefficient Γ enters the dissipator.
///
/// `Linewidth`: each channel carries (Γ/2)(2σρσ† − {σ†σ, ρ}), so |e⟩ decays at
/// 2Γ and the effective non-Hermitian term is −iΓ|e⟩⟨e|. This is the
/// normalization under which the closed-form rates hold with the same Γ.
///
/// `PerChannel`: each channel carries Γ(2σρσ† − {σ†σ, ρ}) literally, so |e⟩
/// decays at 4Γ. Closed forms are then evaluated with 2Γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecayConvention {
    #[default]
    Linewidth,
    PerChannel,
}

impl FromStr for DecayConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linewidth" => Ok(DecayConvention::Linewidth),
            "per_channel" | "per-channel" => Ok(DecayConvention::PerChannel),
            other => Err(Error::InvalidParams(format!(
                "unknown decay convention '{other}' (expected linewidth or per_channel)"
            ))),
        }
    }
}

impl fmt::Display for DecayConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecayConvention::Linewidth => "linewidth",
            DecayConvention::PerChannel => "per_channel",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub nu: f64,
    pub gamma: f64,
    pub delta: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub phi: f64,
    pub eta_up: f64,
    pub eta_down: f64,
    pub n_max: usize,
    pub alpha: f64,
    pub decay: DecayConvention,
}

impl Default for SystemParams {
    /// Single-ion defaults: Γ=15ν, ΩA=2.3ν, ΩB=ν, ηB=0.1 and ηA=0.025 on the
    /// cancellation condition.
    fn default() -> Self {
        Self {
            nu: 1.0,
            gamma: 15.0,
            delta: 0.0,
            omega_a: 2.3,
            omega_b: 1.0,
            eta_a: 0.025,
            eta_b: 0.1,
            phi: 0.0,
            eta_up: 0.0,
            eta_down: 0.0,
            n_max: 15,
            alpha: RECOIL_ALPHA,
            decay: DecayConvention::Linewidth,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("nu", self.nu),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("eta_a", self.eta_a),
            ("eta_b", self.eta_b),
            ("phi", self.phi),
            ("eta_up", self.eta_up),
            ("eta_down", self.eta_down),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if self.nu <= 0.0 {
            return Err(Error::InvalidParams("nu must be > 0".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParams("gamma must be ≥ 0".into()));
        }
        if self.omega_a < 0.0 {
            return Err(Error::InvalidParams("omega_a must be ≥ 0".into()));
        }
        if self.n_max < 2 {
            return Err(Error::InvalidParams(format!(
                "n_max = {} but at least 2 Fock states above vacuum are needed",
                self.n_max
            )));
        }
        for (name, v) in [
            ("eta_a", self.eta_a),
            ("eta_b", self.eta_b),
            ("eta_up", self.eta_up),
            ("eta_down", self.eta_down),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be ≥ 0")));
            }
            if v > LAMB_DICKE_WARN {
                log::warn!("{name} = {v} is outside the Lamb-Dicke regime");
            }
        }
        if (self.alpha - RECOIL_ALPHA).abs() > 1e-15 {
            return Err(Error::InvalidParams(format!(
                "alpha is fixed to {RECOIL_ALPHA} by the dipole emission pattern, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::new(self.n_max)
    }

    /// Lindblad coefficient γ of one decay channel in γ(2σρσ† − {σ†σ, ρ}).
    pub fn channel_coefficient(&self) -> f64 {
        match self.decay {
            DecayConvention::Linewidth => 0.5 * self.gamma,
            DecayConvention::PerChannel => self.gamma,
        }
    }

    /// Half the total decay rate of |e⟩; this is the Γ of the closed forms.
    pub fn effective_gamma(&self) -> f64 {
        2.0 * self.channel_coefficient()
    }

    /// δe = Δ + ΩB/2, the |e⟩ energy measured from |−⟩.
    pub fn delta_e(&self) -> f64 {
        self.delta + 0.5 * self.omega_b
    }

    /// δ+ = ΩB, the |+⟩ energy measured from |−⟩.
    pub fn delta_plus(&self) -> f64 {
        self.omega_b
    }

    /// Sets ηB from ηA so the blue sideband cancels.
    pub fn with_condition_eta_b(mut self) -> Result<Self> {
        self.eta_b = self.eta_a * crate::model::condition_ratio(self.nu, self.omega_b)?;
        Ok(self)
    }

    /// Sets ηA from ηB so the blue sideband cancels.
    pub fn with_condition_eta_a(mut self) -> Result<Self> {
        self.eta_a = self.eta_b / crate::model::condition_ratio(self.nu, self.omega_b)?;
        Ok(self)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }
}

/// Electronic levels in the analysis basis, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Minus = 0,
    Plus = 1,
    Excited = 2,
}

/// Three electronic levels ⊗ Fock states 0..=n_max, electronic index major:
/// `index = level·(n_max+1) + n` with levels ordered (−, +, e).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    pub n_electronic: usize,
    pub n_fock: usize,
    pub dim: usize,
}

impl HilbertSpace {
    pub fn new(n_max: usize) -> Self {
        let n_fock = n_max + 1;
        Self {
            n_electronic: 3,
            n_fock,
            dim: 3 * n_fock,
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_fock - 1
    }

    pub fn index(&self, level: Level, n: usize) -> usize {
        debug_assert!(n < self.n_fock);
        level as usize * self.n_fock + n
    }
}
