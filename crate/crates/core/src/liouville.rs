//! Lindblad superoperator in the Lamb-Dicke expansion, steady states and
//! time evolution.
//!
//! Density matrices are vectorized row-major, vec(ρ)[i·d + j] = ρ_ij, so
//! vec(AρB) = (A ⊗ Bᵀ) vec(ρ). Superoperators are stored sparse; solves use a
//! banded LU in motional-major ordering, where each order couples only
//! neighbouring phonon-number blocks.

use ndarray::{Array1, Array2};

use crate::banded::BandedLu;
use crate::error::{Error, Result};
use crate::model::{self, build_hamiltonian, HamiltonianTerms};
use crate::ode::{self, Tolerances};
use crate::operators::{self, OperatorMatrix, C64, I, ONE, ZERO};
use crate::params::{HilbertSpace, Level, Scheme, SystemParams};
use crate::sparse::CsrMatrix;

/// Pivot threshold, relative to max|L_ij|, below which a direction counts as
/// part of the null space.
pub const NULL_TOLERANCE: f64 = 1e-8;

struct SuperBuilder {
    d: usize,
    trip: Vec<(usize, usize, C64)>,
}

impl SuperBuilder {
    fn new(d: usize) -> Self {
        Self { d, trip: Vec::new() }
    }

    /// c · A ρ B.
    fn sandwich(&mut self, a: &OperatorMatrix, b: &OperatorMatrix, c: C64) {
        let d = self.d;
        let bn = b.nonzeros();
        for (i, k, av) in a.nonzeros() {
            for &(l, j, bv) in &bn {
                self.trip.push((i * d + j, k * d + l, c * av * bv));
            }
        }
    }

    /// c · A ρ.
    fn left(&mut self, a: &OperatorMatrix, c: C64) {
        let d = self.d;
        for (i, k, av) in a.nonzeros() {
            for j in 0..d {
                self.trip.push((i * d + j, k * d + j, c * av));
            }
        }
    }

    /// c · ρ B.
    fn right(&mut self, b: &OperatorMatrix, c: C64) {
        let d = self.d;
        for (l, j, bv) in b.nonzeros() {
            for i in 0..d {
                self.trip.push((i * d + j, i * d + l, c * bv));
            }
        }
    }

    /// −i[H, ·].
    fn commutator(&mut self, h: &OperatorMatrix) {
        self.left(h, -I);
        self.right(h, I);
    }

    fn finish(self) -> CsrMatrix {
        let n = self.d * self.d;
        CsrMatrix::from_triplets(n, n, self.trip)
    }
}

/// σ_{i,e} = |i⟩⟨e| for i ∈ {↑, ↓}, in the analysis basis, on the electronic factor.
pub fn lowering_operators() -> [Array2<C64>; 2] {
    [
        model::bare_to_analysis(&operators::ket_bra(3, 0, 2)),
        model::bare_to_analysis(&operators::ket_bra(3, 1, 2)),
    ]
}

/// Order 0: Σ_i γ(2σρσ† − σ†σρ − ρσ†σ). Order 2: the recoil correction
/// Σ_i 2γ α η_i² σ(2q̂ρq̂ − q̂²ρ − ρq̂²)σ†, from expanding the angular average
/// of e^{ik·x}ρe^{−ik·x} to second order in η.
pub fn build_dissipator(params: &SystemParams, order: usize) -> Result<CsrMatrix> {
    params.validate()?;
    let space = params.space();
    let nf = space.n_fock;
    let d = space.dim;
    let gamma = params.channel_coefficient();
    let dims = vec![3, nf];
    let id_m: Array2<C64> = Array2::eye(nf);
    let q = operators::position(nf);
    let q2 = q.dot(&q);
    let mut sb = SuperBuilder::new(d);
    let etas = [params.eta_up, params.eta_down];

    for (sigma, eta) in lowering_operators().iter().zip(etas) {
        let sd = operators::dagger(sigma);
        match order {
            0 => {
                let s = OperatorMatrix::new(dims.clone(), operators::kron(sigma, &id_m));
                let sdag = s.dagger();
                let ss = sdag.matmul(&s);
                sb.sandwich(&s, &sdag, C64::new(2.0 * gamma, 0.0));
                sb.left(&ss, C64::new(-gamma, 0.0));
                sb.right(&ss, C64::new(-gamma, 0.0));
            }
            2 => {
                let c = 2.0 * gamma * params.alpha * eta * eta;
                if c == 0.0 {
                    continue;
                }
                let sq = OperatorMatrix::new(dims.clone(), operators::kron(sigma, &q));
                let sdq = OperatorMatrix::new(dims.clone(), operators::kron(&sd, &q));
                let sq2 = OperatorMatrix::new(dims.clone(), operators::kron(sigma, &q2));
                let sdq2 = OperatorMatrix::new(dims.clone(), operators::kron(&sd, &q2));
                let s = OperatorMatrix::new(dims.clone(), operators::kron(sigma, &id_m));
                let sdag = s.dagger();
                sb.sandwich(&sq, &sdq, C64::new(2.0 * c, 0.0));
                sb.sandwich(&sq2, &sdag, C64::new(-c, 0.0));
                sb.sandwich(&s, &sdq2, C64::new(-c, 0.0));
            }
            other => {
                return Err(Error::InvalidParams(format!(
                    "dissipator has orders 0 and 2 only, got {other}"
                )))
            }
        }
    }
    Ok(sb.finish())
}

#[derive(Debug, Clone)]
pub struct SuperOp {
    pub params: SystemParams,
    pub scheme: Scheme,
    pub space: HilbertSpace,
    pub order0: CsrMatrix,
    pub order1: CsrMatrix,
    pub order2: CsrMatrix,
    pub total: CsrMatrix,
    /// −iν[b†b, ·], the motional part of order 0.
    pub l0_external: CsrMatrix,
    /// Electronic part of order 0 (coherent and dissipative).
    pub l0_internal: CsrMatrix,
}

impl SuperOp {
    pub fn dim(&self) -> usize {
        self.total.nrows()
    }
}

pub fn build_liouvillian(params: &SystemParams, scheme: Scheme) -> Result<SuperOp> {
    let h = build_hamiltonian(params, scheme)?;
    liouvillian_from_terms(params, scheme, &h)
}

fn liouvillian_from_terms(params: &SystemParams, scheme: Scheme, h: &HamiltonianTerms) -> Result<SuperOp> {
    let d = h.space.dim;
    let coherent = |op: &OperatorMatrix| {
        let mut sb = SuperBuilder::new(d);
        sb.commutator(op);
        sb.finish()
    };
    let l0_external = coherent(&h.h_tr);
    let internal_h = &(&h.h_int + &h.v_eit0) + &h.v_ssh0;
    let l0_internal = coherent(&internal_h).add(&build_dissipator(params, 0)?);
    let order0 = l0_external.add(&l0_internal);
    let order1 = coherent(&h.order1());
    let order2 = coherent(&h.order2()).add(&build_dissipator(params, 2)?);
    let total = order0.add(&order1).add(&order2);
    Ok(SuperOp {
        params: params.clone(),
        scheme,
        space: h.space,
        order0,
        order1,
        order2,
        total,
        l0_external,
        l0_internal,
    })
}

/// Maps electronic-major vec indices to motional-major ones,
/// ((n·N + m)·3 + a)·3 + b for ρ_{(a,n),(b,m)}.
pub fn motional_major_permutation(space: &HilbertSpace) -> Vec<usize> {
    let nf = space.n_fock;
    let d = space.dim;
    let mut perm = vec![0; d * d];
    for a in 0..3 {
        for n in 0..nf {
            for b in 0..3 {
                for m in 0..nf {
                    let old = (a * nf + n) * d + b * nf + m;
                    perm[old] = ((n * nf + m) * 3 + a) * 3 + b;
                }
            }
        }
    }
    perm
}

/// Factorized Liouvillian with one diagonal row pinned, ready for steady
/// states and resolvent solves.
pub struct LiouvillianSolver {
    space: HilbertSpace,
    perm: Vec<usize>,
    lu: BandedLu,
    pinned: usize,
    norm: f64,
}

impl LiouvillianSolver {
    /// Pins ρ_{(−,n),(−,n)} for the first n that gives a regular system.
    pub fn new(generator: &CsrMatrix, space: HilbertSpace) -> Result<Self> {
        let perm = motional_major_permutation(&space);
        let permuted = generator.permuted(&perm);
        let norm = generator.max_abs();
        let d = space.dim;
        let mut fewest = usize::MAX;
        for n in 0..space.n_fock {
            let i = space.index(Level::Minus, n);
            let pinned = perm[i * d + i];
            let mut trip: Vec<_> = permuted.triplets().filter(|&(r, _, _)| r != pinned).collect();
            trip.push((pinned, pinned, ONE));
            let a = CsrMatrix::from_triplets(d * d, d * d, trip);
            let lu = BandedLu::factor(&a, NULL_TOLERANCE);
            if lu.small_pivots() == 0 {
                return Ok(Self { space, perm, lu, pinned, norm });
            }
            fewest = fewest.min(lu.small_pivots());
            if n >= 2 {
                break;
            }
        }
        Err(Error::DegenerateNullSpace {
            dimension: fewest + 1,
            tolerance: NULL_TOLERANCE,
        })
    }

    fn solve_permuted(&self, mut rhs: Vec<C64>) -> Result<Vec<C64>> {
        self.lu.solve_in_place(&mut rhs)?;
        if rhs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::SolverFailure("non-finite solution".into()));
        }
        Ok(rhs)
    }

    fn to_matrix(&self, x: &[C64]) -> Array2<C64> {
        let d = self.space.dim;
        Array2::from_shape_fn((d, d), |(i, j)| x[self.perm[i * d + j]])
    }

    /// Unnormalized steady state with the pinned element equal to one.
    fn raw_steady(&self) -> Result<Array2<C64>> {
        let n = self.lu.dim();
        let mut rhs = vec![ZERO; n];
        rhs[self.pinned] = ONE;
        Ok(self.to_matrix(&self.solve_permuted(rhs)?))
    }

    /// X with L(X) = b and X's pinned element zero; b must be traceless.
    pub fn solve_traceless(&self, b: &Array2<C64>) -> Result<Array2<C64>> {
        let d = self.space.dim;
        let mut rhs = vec![ZERO; d * d];
        for ((i, j), v) in b.indexed_iter() {
            rhs[self.perm[i * d + j]] = *v;
        }
        rhs[self.pinned] = ZERO;
        Ok(self.to_matrix(&self.solve_permuted(rhs)?))
    }

    pub fn generator_scale(&self) -> f64 {
        self.norm
    }
}

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    pub rho: Array2<C64>,
    pub mean_n: f64,
    pub fidelity_target: f64,
    pub residual: f64,
    /// max|L_ij|, the scale the residual is measured against.
    pub generator_scale: f64,
    pub min_eigenvalue: f64,
}

pub fn steady_state(l: &SuperOp) -> Result<SteadyStateResult> {
    let solver = LiouvillianSolver::new(&l.total, l.space)?;
    steady_state_with(l, &solver)
}

fn steady_state_with(l: &SuperOp, solver: &LiouvillianSolver) -> Result<SteadyStateResult> {
    let raw = solver.raw_steady()?;
    let (rho, min_eigenvalue) = physical_state(raw)?;
    let residual = vec_norm(&l.total.matvec(rho.as_slice().unwrap()));
    let scale = solver.generator_scale();
    if residual > 1e-6 * scale.max(1.0) {
        return Err(Error::SolverFailure(format!(
            "steady-state residual {residual:e} against scale {scale:e}"
        )));
    }
    let target = model::target_steady_state(&l.params);
    Ok(SteadyStateResult {
        mean_n: mean_phonon(&rho, &l.space),
        fidelity_target: state_fidelity(&rho, &target),
        residual,
        generator_scale: scale,
        min_eigenvalue,
        rho,
    })
}

/// Normalizes, Hermitizes and removes negative eigenvalues at numerical noise level.
fn physical_state(raw: Array2<C64>) -> Result<(Array2<C64>, f64)> {
    let tr = operators::trace(&raw);
    if tr.norm() == 0.0 || !tr.re.is_finite() {
        return Err(Error::SolverFailure("steady state has zero trace".into()));
    }
    let rho = raw / tr;
    let herm = (&rho + &operators::dagger(&rho)) * C64::new(0.5, 0.0);
    let (vals, vecs) = operators::hermitian_eigh(&herm)
        .map_err(|e| Error::SolverFailure(format!("eigendecomposition failed: {e}")))?;
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-8 {
        return Err(Error::SolverFailure(format!("steady state has eigenvalue {min:e}")));
    }
    if min >= 0.0 {
        return Ok((herm, min));
    }
    let clipped = vals.mapv(|v| C64::new(v.max(0.0), 0.0));
    let scaled = &vecs * &clipped.view().insert_axis(ndarray::Axis(0));
    let mut rho = scaled.dot(&operators::dagger(&vecs));
    let tr = operators::trace(&rho);
    rho /= tr;
    Ok((rho, 0.0))
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ⟨ψ|ρ|ψ⟩.
pub fn state_fidelity(rho: &Array2<C64>, psi: &Array1<C64>) -> f64 {
    let r = rho.dot(psi);
    psi.iter().zip(r.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().re
}

/// Tr[ρ b†b].
pub fn mean_phonon(rho: &Array2<C64>, space: &HilbertSpace) -> f64 {
    let nf = space.n_fock;
    (0..space.dim).map(|i| rho[[i, i]].re * (i % nf) as f64).sum()
}

/// Populations of (−, +, e).
pub fn electronic_populations(rho: &Array2<C64>, space: &HilbertSpace) -> [f64; 3] {
    let nf = space.n_fock;
    let mut p = [0.0; 3];
    for i in 0..space.dim {
        p[i / nf] += rho[[i, i]].re;
    }
    p
}

/// |a⟩⟨a| ⊗ |n⟩⟨n|.
pub fn product_state(space: &HilbertSpace, level: Level, n: usize) -> Array2<C64> {
    let mut rho = Array2::zeros((space.dim, space.dim));
    let i = space.index(level, n);
    rho[[i, i]] = ONE;
    rho
}

#[derive(Debug, Clone)]
pub struct EvolutionPoint {
    pub t: f64,
    pub rho: Array2<C64>,
    pub mean_n: f64,
    pub populations: [f64; 3],
    pub trace: f64,
}

pub fn evolve(l: &SuperOp, rho0: &Array2<C64>, t_grid: &[f64]) -> Result<Vec<EvolutionPoint>> {
    evolve_with(&l.total, &l.space, rho0, t_grid)
}

/// Integrates dρ/dt = G ρ for an arbitrary generator on `space`.
pub fn evolve_with(
    generator: &CsrMatrix,
    space: &HilbertSpace,
    rho0: &Array2<C64>,
    t_grid: &[f64],
) -> Result<Vec<EvolutionPoint>> {
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("time grid must be strictly increasing".into()));
    }
    let d = space.dim;
    if rho0.dim() != (d, d) {
        return Err(Error::InvalidParams("initial state has the wrong dimension".into()));
    }
    let y0: Vec<C64> = rho0.iter().copied().collect();
    let ys = ode::dopri5(|_, y, dy| generator.matvec_into(y, dy), &y0, t_grid, Tolerances::default())?;
    Ok(t_grid
        .iter()
        .zip(ys)
        .map(|(&t, y)| {
            let rho = Array2::from_shape_vec((d, d), y).unwrap();
            EvolutionPoint {
                t,
                mean_n: mean_phonon(&rho, space),
                populations: electronic_populations(&rho, space),
                trace: operators::trace(&rho).re,
                rho,
            }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct RelaxationRate {
    /// (n0 − n_ss) / ∫(⟨n⟩(t) − n_ss) dt.
    pub rate: f64,
    pub n_initial: f64,
    pub n_ss: f64,
    pub steady: SteadyStateResult,
}

/// Cooling rate from the integrated relaxation of |−⟩⟨−| ⊗ |n0⟩⟨n0|. For a
/// single-exponential approach this is the decay constant; the integral is
/// the resolvent L⁻¹(ρ0 − ρss) on traceless matrices.
pub fn relaxation_rate(l: &SuperOp, n0: usize) -> Result<RelaxationRate> {
    let solver = LiouvillianSolver::new(&l.total, l.space)?;
    let steady = steady_state_with(l, &solver)?;
    let rho0 = product_state(&l.space, Level::Minus, n0);
    let b = &steady.rho - &rho0;
    let x = solver.solve_traceless(&b)?;
    let tr = operators::trace(&x);
    let x = &x - &(&steady.rho * tr);
    let integral = mean_phonon(&x, &l.space);
    let n_initial = n0 as f64;
    Ok(RelaxationRate {
        rate: (n_initial - steady.mean_n) / integral,
        n_initial,
        n_ss: steady.mean_n,
        steady,
    })
}

/// Steady state at `n_max` and `n_max + extra`; the second carries the
/// verdict of the 1% truncation check.
#[derive(Debug, Clone)]
pub struct ConvergedSteadyState {
    pub result: SteadyStateResult,
    pub mean_n_extended: f64,
    pub converged: bool,
}

pub fn steady_state_checked(params: &SystemParams, scheme: Scheme, extra: usize) -> Result<ConvergedSteadyState> {
    let result = steady_state(&build_liouvillian(params, scheme)?)?;
    let wide = params.clone().with_n_max(params.n_max + extra);
    let ext = steady_state(&build_liouvillian(&wide, scheme)?)?;
    let converged = truncation_agrees(result.mean_n, ext.mean_n);
    Ok(ConvergedSteadyState {
        result,
        mean_n_extended: ext.mean_n,
        converged,
    })
}

/// 1% relative agreement, with an absolute floor for vanishing occupations.
pub fn truncation_agrees(a: f64, b: f64) -> bool {
    (a - b).abs() <= 0.01 * a.abs().max(b.abs()) + 1e-12
}
