//! Far-detuned Raman realization of the B coupling.
//!
//! The excited level is eliminated with the harmonic-average second-order
//! formula. The motional quadrature here is q̂ = b + b† and p̂ = i(b − b†).
//! Full model: H_I(t) = Σ_n h_n e^{iω_n t} + h.c. with
//!   h1 = (iΩpηp/2)(|e⟩⟨↑| − |e⟩⟨↓|)b†,  ω1 = Δ′ − ν
//!   h2 = (Ωp/2)(|e⟩⟨↑| + |e⟩⟨↓|),       ω2 = Δ′
//!   h3 = (iΩpηp/2)(|e⟩⟨↑| − |e⟩⟨↓|)b,   ω3 = Δ′ + ν
//! and on the ground manifold H_eff(t) = −Σ_{mn} ω̄_mn⁻¹ h_n† h_m e^{i(ω_m−ω_n)t}.
//! Both are static in the frame rotating with Δ′|e⟩⟨e| − νb†b, where they are
//! propagated exactly.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::operators::{self, C64, I, ZERO};

const UP: usize = 0;
const DOWN: usize = 1;
const EXC: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanParams {
    pub omega_p: f64,
    pub eta_p: f64,
    pub delta_prime: f64,
    pub nu: f64,
}

impl RamanParams {
    pub fn new(omega_p: f64, eta_p: f64, delta_prime: f64) -> Self {
        Self { omega_p, eta_p, delta_prime, nu: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::InvalidParams("nu must be > 0".into()));
        }
        if self.delta_prime == 0.0 || (self.delta_prime.abs() - self.nu).abs() < 1e-12 * self.nu {
            return Err(Error::PoleAtTrapFrequency);
        }
        if self.delta_prime.abs() <= 5.0 * self.nu {
            log::warn!("|Δ′| = {} is inside the 5ν regime guard", self.delta_prime.abs());
        }
        Ok(())
    }

    fn harmonics(&self) -> [f64; 3] {
        [self.delta_prime - self.nu, self.delta_prime, self.delta_prime + self.nu]
    }
}

/// ΩB = Ωp²/(2Δ′), ηB = ηp(2Δ′² − ν²)/(Δ′² − ν²).
pub fn effective_params(r: &RamanParams) -> Result<(f64, f64)> {
    r.validate()?;
    let d2 = r.delta_prime * r.delta_prime;
    let nu2 = r.nu * r.nu;
    Ok((
        r.omega_p * r.omega_p / (2.0 * r.delta_prime),
        r.eta_p * (2.0 * d2 - nu2) / (d2 - nu2),
    ))
}

/// Coefficients of H_eff(0) on {↑, ↓} ⊗ Fock, first order in ηp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoefficients {
    /// Multiplies the ground-state identity.
    pub stark: f64,
    pub sigma_x: f64,
    /// Multiplies σy q̂.
    pub q_sigma_y: f64,
    /// Multiplies σz p̂.
    pub p_sigma_z: f64,
}

pub fn analytic_coefficients(r: &RamanParams) -> Result<EffectiveCoefficients> {
    r.validate()?;
    let (d, nu) = (r.delta_prime, r.nu);
    let base = r.omega_p * r.omega_p / 4.0;
    Ok(EffectiveCoefficients {
        stark: -base / d,
        sigma_x: -base / d,
        q_sigma_y: -base * r.eta_p * (2.0 * d * d - nu * nu) / (d * (d * d - nu * nu)),
        p_sigma_z: base * r.eta_p * nu / (d * d - nu * nu),
    })
}

fn harmonic_terms(r: &RamanParams, n_fock: usize) -> [Array2<C64>; 3] {
    let kb = |i, j| operators::ket_bra(3, i, j);
    let diff = &kb(EXC, UP) - &kb(EXC, DOWN);
    let sum = &kb(EXC, UP) + &kb(EXC, DOWN);
    let b = operators::destroy(n_fock);
    let bd = operators::dagger(&b);
    let side = I * C64::new(0.5 * r.omega_p * r.eta_p, 0.0);
    [
        operators::kron(&diff, &bd) * side,
        operators::kron(&sum, &Array2::eye(n_fock)) * C64::new(0.5 * r.omega_p, 0.0),
        operators::kron(&diff, &b) * side,
    ]
}

fn ground_block(m: &Array2<C64>, n_fock: usize) -> Array2<C64> {
    m.slice(ndarray::s![..2 * n_fock, ..2 * n_fock]).to_owned()
}

/// H_eff(t) = Σ_k c_k e^{iω_k t}, kept as separate harmonics.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub n_fock: usize,
    pub terms: Vec<(f64, Array2<C64>)>,
}

impl EffectiveHamiltonian {
    pub fn at(&self, t: f64) -> Array2<C64> {
        let d = 2 * self.n_fock;
        let mut h = Array2::zeros((d, d));
        for (w, op) in &self.terms {
            h.scaled_add(C64::from_polar(1.0, w * t), op);
        }
        h
    }

    /// Projects H_eff(0) onto 1, σx, σy q̂, σz p̂.
    pub fn coefficients(&self) -> EffectiveCoefficients {
        let h = self.at(0.0);
        let nf = self.n_fock;
        let q = operators::quadrature(nf);
        let p = operators::momentum(nf);
        let proj = |e: Array2<C64>, m: &Array2<C64>| {
            let basis = operators::kron(&e, m);
            let num: C64 = basis.iter().zip(h.iter()).map(|(b, x)| b.conj() * x).sum();
            let den: f64 = basis.iter().map(|b| b.norm_sqr()).sum();
            num.re / den
        };
        let pauli = |a: C64, b: C64, c: C64, d: C64| ndarray::array![[a, b], [c, d]];
        let one = C64::new(1.0, 0.0);
        EffectiveCoefficients {
            stark: proj(pauli(one, ZERO, ZERO, one), &Array2::eye(nf)),
            sigma_x: proj(pauli(ZERO, one, one, ZERO), &Array2::eye(nf)),
            q_sigma_y: proj(pauli(ZERO, -I, I, ZERO), &q),
            p_sigma_z: proj(pauli(one, ZERO, ZERO, -one), &p),
        }
    }

    pub fn hermiticity_defect(&self, t: f64) -> f64 {
        operators::hermiticity_defect(&self.at(t))
    }
}

/// Builds H_eff on {↑, ↓} ⊗ Fock. `second_order` keeps the η² pairs (1,1),
/// (1,3), (3,1), (3,3) as well.
pub fn effective_hamiltonian(r: &RamanParams, n_max: usize, second_order: bool) -> Result<EffectiveHamiltonian> {
    r.validate()?;
    let nf = n_max + 1;
    let h = harmonic_terms(r, nf);
    let w = r.harmonics();
    let mut terms = Vec::new();
    for m in 0..3 {
        for n in 0..3 {
            let eta_order = (m != 1) as usize + (n != 1) as usize;
            if eta_order > 1 && !second_order {
                continue;
            }
            let inv = 0.5 * (1.0 / w[m] + 1.0 / w[n]);
            let prod = operators::dagger(&h[n]).dot(&h[m]);
            terms.push((w[m] - w[n], ground_block(&prod, nf) * C64::new(-inv, 0.0)));
        }
    }
    Ok(EffectiveHamiltonian { n_fock: nf, terms })
}

fn number_op(levels: usize, nf: usize) -> Array2<C64> {
    operators::kron(&Array2::eye(levels), &operators::number(nf))
}

/// Static frame Hamiltonians (full, effective).
fn frame_hamiltonians(r: &RamanParams, n_max: usize, second_order: bool) -> Result<(Array2<C64>, Array2<C64>)> {
    let nf = n_max + 1;
    let h = harmonic_terms(r, nf);
    let mut full: Array2<C64> = operators::kron(&operators::ket_bra(3, EXC, EXC), &Array2::eye(nf))
        * C64::new(r.delta_prime, 0.0)
        - number_op(3, nf) * C64::new(r.nu, 0.0);
    for hn in &h {
        full = full + hn + &operators::dagger(hn);
    }
    let eff = effective_hamiltonian(r, n_max, second_order)?.at(0.0) - number_op(2, nf) * C64::new(r.nu, 0.0);
    Ok((full, eff))
}

struct Propagator {
    values: Array1<f64>,
    vectors: Array2<C64>,
    coeffs: Array1<C64>,
}

impl Propagator {
    fn new(h: &Array2<C64>, psi0: &Array1<C64>) -> Result<Self> {
        let (values, vectors) = operators::hermitian_eigh(h).map_err(Error::SolverFailure)?;
        let coeffs = operators::dagger(&vectors).dot(psi0);
        Ok(Self { values, vectors, coeffs })
    }

    fn state(&self, t: f64) -> Array1<C64> {
        let phased: Array1<C64> = self
            .coeffs
            .iter()
            .zip(self.values.iter())
            .map(|(c, e)| c * C64::from_polar(1.0, -e * t))
            .collect();
        self.vectors.dot(&phased)
    }
}

fn ground_populations(psi: &Array1<C64>, nf: usize) -> [f64; 2] {
    let pop = |lvl: usize| (0..nf).map(|n| psi[lvl * nf + n].norm_sqr()).sum();
    [pop(UP), pop(DOWN)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Defaults to 20/ΩB.
    pub t_max: Option<f64>,
    pub n_max: usize,
    pub samples: usize,
    pub second_order: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { t_max: None, n_max: 4, samples: 2000, second_order: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationResult {
    pub max_deviation: f64,
    pub t_max: f64,
    pub times: Vec<f64>,
    pub full: Vec<[f64; 2]>,
    pub effective: Vec<[f64; 2]>,
}

/// Evolves |↓, 0⟩ under the full and effective models and compares the
/// ground-state populations on a uniform grid over [0, t_max].
pub fn validate_elimination(r: &RamanParams, opts: &ValidationOptions) -> Result<ValidationResult> {
    r.validate()?;
    let nf = opts.n_max + 1;
    let t_max = match opts.t_max {
        Some(t) => t,
        None if r.omega_p == 0.0 => 1.0,
        None => 20.0 / effective_params(r)?.0.abs(),
    };
    let (hf, he) = frame_hamiltonians(r, opts.n_max, opts.second_order)?;
    let mut psi_f = Array1::zeros(3 * nf);
    psi_f[DOWN * nf] = C64::new(1.0, 0.0);
    let psi_e = psi_f.slice(ndarray::s![..2 * nf]).to_owned();
    let full = Propagator::new(&hf, &psi_f)?;
    let eff = Propagator::new(&he, &psi_e)?;
    let samples = opts.samples.max(2);
    let times: Vec<f64> = (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect();
    let mut out = ValidationResult { max_deviation: 0.0, t_max, times, full: vec![], effective: vec![] };
    for &t in &out.times {
        let a = ground_populations(&full.state(t), nf);
        let b = ground_populations(&eff.state(t), nf);
        let dev = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
        out.max_deviation = out.max_deviation.max(dev);
        out.full.push(a);
        out.effective.push(b);
    }
    Ok(out)
}
