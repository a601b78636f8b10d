//! Two discrete states coupled to a discretized continuum.
//!
//! Basis order: |+⟩, |e⟩, then the M continuum modes. |+⟩ sits at ΩB and
//! couples to |e⟩ with ΩA/√2; |e⟩ couples to mode j with strength c_j.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumModel {
    pub k_grid: Vec<f64>,
    pub coupling_profile: Vec<f64>,
    pub omega_a: f64,
    pub omega_b: f64,
    /// Energy of |e⟩ before coupling.
    pub excited_energy: f64,
}

impl ContinuumModel {
    /// Uniform grid on [k_lo, k_hi] with flat coupling g√Δk.
    pub fn flat(omega_a: f64, omega_b: f64, g: f64, modes: usize, k_lo: f64, k_hi: f64) -> Self {
        let dk = (k_hi - k_lo) / (modes - 1) as f64;
        let k_grid: Vec<f64> = (0..modes).map(|j| k_lo + dk * j as f64).collect();
        Self {
            coupling_profile: vec![g * dk.sqrt(); modes],
            k_grid,
            omega_a,
            omega_b,
            excited_energy: 0.0,
        }
    }

    /// Flat profile multiplied by a Lorentzian taper of half-width `width`.
    pub fn tapered(omega_a: f64, omega_b: f64, g: f64, modes: usize, k_lo: f64, k_hi: f64, width: f64) -> Self {
        let mut m = Self::flat(omega_a, omega_b, g, modes, k_lo, k_hi);
        for (c, k) in m.coupling_profile.iter_mut().zip(&m.k_grid) {
            *c /= (1.0 + (k / width).powi(2)).sqrt();
        }
        m
    }

    pub fn grid_spacing(&self) -> f64 {
        (self.k_grid[self.k_grid.len() - 1] - self.k_grid[0]) / (self.k_grid.len() - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_grid.len() != self.coupling_profile.len() {
            return Err(Error::InvalidParams("coupling profile length differs from k grid".into()));
        }
        if self.k_grid.len() < 2 || self.k_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("k grid must be strictly increasing".into()));
        }
        if self.coupling_profile.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams("non-finite continuum coupling".into()));
        }
        if self.k_grid.len() < 500 {
            log::warn!("continuum with {} modes is below the 500-mode floor", self.k_grid.len());
        }
        Ok(())
    }

    fn hamiltonian(&self) -> Array2<f64> {
        let m = self.k_grid.len();
        let mut h = Array2::zeros((m + 2, m + 2));
        h[[0, 0]] = self.omega_b;
        h[[0, 1]] = self.omega_a / std::f64::consts::SQRT_2;
        h[[1, 0]] = h[[0, 1]];
        h[[1, 1]] = self.excited_energy;
        for (j, (&k, &c)) in self.k_grid.iter().zip(&self.coupling_profile).enumerate() {
            h[[j + 2, j + 2]] = k;
            h[[1, j + 2]] = c;
            h[[j + 2, 1]] = c;
        }
        h
    }
}

/// Eigenstates of the full model, sorted by energy, in the gauge ⟨+|k⟩ ≥ 0
/// (⟨e|k⟩ ≥ 0 where ⟨+|k⟩ vanishes).
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumSpectrum {
    pub energies: Vec<f64>,
    pub overlap_e: Vec<f64>,
    pub overlap_plus: Vec<f64>,
}

impl ContinuumSpectrum {
    /// Σ_k |⟨e|k⟩|² over all eigenstates.
    pub fn excited_weight(&self) -> f64 {
        self.overlap_e.iter().map(|v| v * v).sum()
    }

    pub fn plus_weight(&self) -> f64 {
        self.overlap_plus.iter().map(|v| v * v).sum()
    }
}

pub fn diagonalize_continuum(model: &ContinuumModel) -> Result<ContinuumSpectrum> {
    model.validate()?;
    let (vals, vecs) = model
        .hamiltonian()
        .eigh(UPLO::Upper)
        .map_err(|e| Error::SolverFailure(format!("continuum diagonalization failed: {e}")))?;
    let n = vals.len();
    let mut overlap_e = Vec::with_capacity(n);
    let mut overlap_plus = Vec::with_capacity(n);
    for j in 0..n {
        let (mut p, mut e) = (vecs[[0, j]], vecs[[1, j]]);
        let flip = if p.abs() > 1e-14 { p < 0.0 } else { e < 0.0 };
        if flip {
            p = -p;
            e = -e;
        }
        overlap_plus.push(p);
        overlap_e.push(e);
    }
    Ok(ContinuumSpectrum {
        energies: vals.to_vec(),
        overlap_e,
        overlap_plus,
    })
}

/// Worst relative deviation of ⟨e|k⟩/⟨+|k⟩ from (√2/ΩA)(k − ΩB) over
/// eigenstates with |k − ΩB| > `exclusion`, and the number of states checked.
pub fn overlap_ratio_deviation(
    spectrum: &ContinuumSpectrum,
    omega_a: f64,
    omega_b: f64,
    exclusion: f64,
) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut count = 0;
    for ((&k, &e), &p) in spectrum.energies.iter().zip(&spectrum.overlap_e).zip(&spectrum.overlap_plus) {
        if (k - omega_b).abs() <= exclusion || p.abs() < 1e-12 {
            continue;
        }
        let want = std::f64::consts::SQRT_2 / omega_a * (k - omega_b);
        worst = worst.max(((e / p) - want).abs() / want.abs());
        count += 1;
    }
    (worst, count)
}

/// Energy where ⟨e|k⟩ changes sign, by linear interpolation between the
/// neighbouring eigenvalues. Takes the crossing closest to `hint`.
pub fn fano_zero(spectrum: &ContinuumSpectrum, hint: f64) -> Result<f64> {
    let e = &spectrum.overlap_e;
    let k = &spectrum.energies;
    let mut best: Option<f64> = None;
    for j in 1..k.len() {
        let k0 = if e[j - 1] * e[j] < 0.0 {
            let t = e[j - 1] / (e[j - 1] - e[j]);
            k[j - 1] + t * (k[j] - k[j - 1])
        } else if e[j] == 0.0 && j + 1 < k.len() && e[j - 1] * e[j + 1] < 0.0 {
            k[j]
        } else {
            continue;
        };
        if best.map_or(true, |b| (k0 - hint).abs() < (b - hint).abs()) {
            best = Some(k0);
        }
    }
    best.ok_or(Error::NoCrossing)
}

/// Red and blue sideband couplings through |+⟩, up to the common factor ⟨±ν|+⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandAmplitudes {
    pub red: f64,
    pub blue: f64,
}

pub fn sideband_amplitudes(p: &SystemParams) -> SidebandAmplitudes {
    let half = 0.5 * p.eta_b * p.omega_b;
    SidebandAmplitudes {
        red: p.eta_a * (p.nu - p.omega_b) + half,
        blue: -p.eta_a * (p.omega_b + p.nu) + half,
    }
}
