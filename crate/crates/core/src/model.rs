//! Hamiltonian of the Λ system in the Lamb-Dicke expansion.
//!
//! Couplings are assembled in the bare basis (↑, ↓, e), where the beam phase φ
//! sits on the |e⟩⟨↓| leg of coupling A, then rotated to the analysis basis
//! (−, +, e) with |±⟩ = (|↑⟩ ± |↓⟩)/√2. The exponentials e^{±i√2η q̂} are
//! expanded to second order; the order-2 pieces feed the Liouvillian.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use ndarray::{array, Array1, Array2};

use crate::error::{Error, Result};
use crate::operators::{self, OperatorMatrix, C64, I, ONE, ZERO};
use crate::params::{HilbertSpace, Level, Scheme, SystemParams};

/// Bare-to-analysis rotation: rows are ⟨−|, ⟨+|, ⟨e| in the (↑, ↓, e) basis.
fn rotation() -> Array2<C64> {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    array![[s, -s, ZERO], [s, s, ZERO], [ZERO, ZERO, ONE]]
}

fn to_analysis(bare: &Array2<C64>) -> Array2<C64> {
    let u = rotation();
    u.dot(bare).dot(&operators::dagger(&u))
}

fn plus_hc(m: Array2<C64>) -> Array2<C64> {
    &m + &operators::dagger(&m)
}

const UP: usize = 0;
const DOWN: usize = 1;
const EXC: usize = 2;

/// 3×3 electronic operators in the (−, +, e) basis. The motional coupling of
/// order k is `eta^k · coupling_k ⊗ q̂^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectronicCouplings {
    /// Δ|e⟩⟨e|.
    pub h_int: Array2<C64>,
    pub a0: Array2<C64>,
    pub a1: Array2<C64>,
    pub a2: Array2<C64>,
    pub b0: Array2<C64>,
    pub b1: Array2<C64>,
    pub b2: Array2<C64>,
}

impl ElectronicCouplings {
    pub fn new(p: &SystemParams, scheme: Scheme) -> Self {
        let kb = |i, j| operators::ket_bra(3, i, j);
        let phase = C64::from_polar(1.0, p.phi);
        let half_a = C64::new(0.5 * p.omega_a, 0.0);
        let half_b = C64::new(0.5 * p.omega_b, 0.0);
        let r2 = C64::new(SQRT_2, 0.0);

        let a_up = kb(EXC, UP);
        let a_down = kb(EXC, DOWN) * phase;
        let a0 = plus_hc((&a_up + &a_down) * half_a);
        let a1 = plus_hc((&a_up * (I * r2) - &a_down * (I * r2)) * half_a);
        let a2 = plus_hc((&a_up + &a_down) * (-half_a));

        let flip = kb(UP, DOWN);
        let b0 = plus_hc(&flip * half_b);
        let b1 = plus_hc(&flip * (-I * r2 * half_b));
        let b2 = plus_hc(&flip * (-half_b));

        let zero = Array2::zeros((3, 3));
        let (a1, a2) = match scheme {
            Scheme::Ssh => (zero.clone(), zero.clone()),
            _ => (a1, a2),
        };
        let (b0, b1, b2) = match scheme {
            Scheme::Eit => (zero.clone(), zero.clone(), zero.clone()),
            _ => (b0, b1, b2),
        };

        Self {
            h_int: operators::ket_bra(3, Level::Excited as usize, Level::Excited as usize)
                * C64::new(p.delta, 0.0),
            a0: to_analysis(&a0),
            a1: to_analysis(&a1),
            a2: to_analysis(&a2),
            b0: to_analysis(&b0),
            b1: to_analysis(&b1),
            b2: to_analysis(&b2),
        }
    }

    /// Zeroth-order electronic Hamiltonian.
    pub fn h_el(&self) -> Array2<C64> {
        &self.h_int + &self.a0 + &self.b0
    }
}

/// Hamiltonian pieces on the truncated space. The six fields named in the
/// model split are joined by the order-2 expansion terms.
#[derive(Debug, Clone)]
pub struct HamiltonianTerms {
    pub space: HilbertSpace,
    pub h_tr: OperatorMatrix,
    pub h_int: OperatorMatrix,
    pub v_eit0: OperatorMatrix,
    pub v_eit1: OperatorMatrix,
    pub v_ssh0: OperatorMatrix,
    pub v_ssh1: OperatorMatrix,
    pub v_eit2: OperatorMatrix,
    pub v_ssh2: OperatorMatrix,
}

impl HamiltonianTerms {
    pub fn order0(&self) -> OperatorMatrix {
        &(&(&self.h_tr + &self.h_int) + &self.v_eit0) + &self.v_ssh0
    }

    pub fn order1(&self) -> OperatorMatrix {
        &self.v_eit1 + &self.v_ssh1
    }

    pub fn order2(&self) -> OperatorMatrix {
        &self.v_eit2 + &self.v_ssh2
    }

    /// H0 + H1.
    pub fn first_order(&self) -> OperatorMatrix {
        &self.order0() + &self.order1()
    }

    pub fn all(&self) -> [(&'static str, &OperatorMatrix); 8] {
        [
            ("h_tr", &self.h_tr),
            ("h_int", &self.h_int),
            ("v_eit0", &self.v_eit0),
            ("v_eit1", &self.v_eit1),
            ("v_ssh0", &self.v_ssh0),
            ("v_ssh1", &self.v_ssh1),
            ("v_eit2", &self.v_eit2),
            ("v_ssh2", &self.v_ssh2),
        ]
    }
}

pub fn build_hamiltonian(params: &SystemParams, scheme: Scheme) -> Result<HamiltonianTerms> {
    params.validate()?;
    let space = params.space();
    let nf = space.n_fock;
    let el = ElectronicCouplings::new(params, scheme);

    let q = operators::position(nf);
    let q2 = q.dot(&q);
    let id_m: Array2<C64> = Array2::eye(nf);
    let id_e: Array2<C64> = Array2::eye(3);
    let dims = vec![3, nf];
    let op = |e: &Array2<C64>, m: &Array2<C64>, c: f64| {
        OperatorMatrix::new(dims.clone(), operators::kron(e, m) * C64::new(c, 0.0))
    };

    Ok(HamiltonianTerms {
        space,
        h_tr: op(&id_e, &operators::number(nf), params.nu),
        h_int: op(&el.h_int, &id_m, 1.0),
        v_eit0: op(&el.a0, &id_m, 1.0),
        v_eit1: op(&el.a1, &q, params.eta_a),
        v_ssh0: op(&el.b0, &id_m, 1.0),
        v_ssh1: op(&el.b1, &q, params.eta_b),
        v_eit2: op(&el.a2, &q2, params.eta_a * params.eta_a),
        v_ssh2: op(&el.b2, &q2, params.eta_b * params.eta_b),
    })
}

/// Dressed states of the (+, e) block: |D1⟩ = cos θ|+⟩ − sin θ|e⟩ (lower),
/// |D2⟩ = sin θ|+⟩ + cos θ|e⟩ (upper).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedStates {
    pub mixing_angle: f64,
    pub delta_d1: f64,
    pub delta_d2: f64,
    pub delta_e: f64,
    pub delta_plus: f64,
}

impl DressedStates {
    /// (⟨+|D⟩, ⟨e|D⟩) for D1 and D2.
    pub fn eigenvectors(&self) -> ([f64; 2], [f64; 2]) {
        let (s, c) = self.mixing_angle.sin_cos();
        ([c, -s], [s, c])
    }
}

pub fn dressed_states(params: &SystemParams) -> DressedStates {
    let de = params.delta_e();
    let dp = params.delta_plus();
    let d = de - dp;
    let oa = params.omega_a;
    let root = (2.0 * oa * oa + d * d).sqrt();
    // tan θ = −x + √(x²+1), x = (δe−δ+)/(√2 ΩA), written to survive ΩA = 0.
    let mixing_angle = (-d + root).atan2(SQRT_2 * oa);
    DressedStates {
        mixing_angle,
        delta_d1: 0.5 * (de + dp - root),
        delta_d2: 0.5 * (de + dp + root),
        delta_e: de,
        delta_plus: dp,
    }
}

/// ηB/ηA that cancels the blue sideband: 2ν/ΩB + 2.
pub fn condition_ratio(nu: f64, omega_b: f64) -> Result<f64> {
    if omega_b == 0.0 {
        return Err(Error::SshCouplingAbsent);
    }
    Ok(2.0 * nu / omega_b + 2.0)
}

/// Relative violation of the cancellation condition, |ηB − ratio·ηA|/ηB.
pub fn condition_violation(params: &SystemParams) -> Option<f64> {
    let ratio = condition_ratio(params.nu, params.omega_b).ok()?;
    let scale = params.eta_b.abs().max(ratio * params.eta_a.abs());
    if scale == 0.0 {
        return Some(0.0);
    }
    Some((params.eta_b - ratio * params.eta_a).abs() / scale)
}

/// Normalized |−⟩|0⟩ − iηA|+⟩|1⟩.
pub fn target_steady_state(params: &SystemParams) -> Array1<C64> {
    let space = params.space();
    let mut psi = Array1::zeros(space.dim);
    psi[space.index(Level::Minus, 0)] = ONE;
    psi[space.index(Level::Plus, 1)] = -I * params.eta_a;
    let norm = (1.0 + params.eta_a * params.eta_a).sqrt();
    psi / C64::new(norm, 0.0)
}

/// ‖(H0 + H1 − E)|Ψss⟩‖ with E = −ΩB/2.
pub fn eigenstate_residual(params: &SystemParams, scheme: Scheme) -> Result<f64> {
    let h = build_hamiltonian(params, scheme)?.first_order();
    let psi = target_steady_state(params);
    let e = C64::new(-0.5 * params.omega_b, 0.0);
    let r = h.apply(&psi) - &psi * e;
    Ok(r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}

/// Operator in the (↑, ↓, e) basis expressed in the (−, +, e) basis.
pub fn bare_to_analysis(bare: &Array2<C64>) -> Array2<C64> {
    to_analysis(bare)
}

/// Inverse of [`bare_to_analysis`].
pub fn analysis_to_bare(m: &Array2<C64>) -> Array2<C64> {
    let u = rotation();
    operators::dagger(&u).dot(m).dot(&u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eit_leg_matches_sigma_x_e_plus() {
        let p = SystemParams { omega_a: 1.7, ..Default::default() };
        let el = ElectronicCouplings::new(&p, Scheme::Robust);
        let want = 1.7 * FRAC_1_SQRT_2;
        assert!((el.a0[[2, 1]].re - want).abs() < 1e-15);
        assert!((el.a0[[1, 2]].re - want).abs() < 1e-15);
        assert!(el.a0[[0, 2]].norm() < 1e-15);
    }

    #[test]
    fn motional_a_term_is_sigma_y_e_minus() {
        let p = SystemParams { omega_a: 1.3, ..Default::default() };
        let el = ElectronicCouplings::new(&p, Scheme::Robust);
        // σy^(e,−) = i|e⟩⟨−| − i|−⟩⟨e|
        assert!((el.a1[[2, 0]] - I * 1.3).norm() < 1e-14);
        assert!((el.a1[[0, 2]] + I * 1.3).norm() < 1e-14);
    }

    #[test]
    fn motional_b_term_is_sigma_y_plus_minus() {
        let p = SystemParams { omega_b: 0.8, ..Default::default() };
        let el = ElectronicCouplings::new(&p, Scheme::Robust);
        let c = 0.8 * FRAC_1_SQRT_2;
        assert!((el.b1[[1, 0]] - I * c).norm() < 1e-14);
        assert!((el.b1[[0, 1]] + I * c).norm() < 1e-14);
        assert!((el.b0[[1, 1]].re - 0.4).abs() < 1e-15);
        assert!((el.b0[[0, 0]].re + 0.4).abs() < 1e-15);
    }
}
