//! Quantum-jump trajectories for ions sharing the normal modes of a linear
//! Coulomb chain.
//!
//! Basis order: ion electronic factors (−, +, e) first, ion 0 most
//! significant, then the motional modes. Between jumps the unnormalized state
//! follows H_nh = H − (i/2)Σ J†J, propagated with an Arnoldi approximation
//! of the exponential; a jump fires when ‖ψ‖² falls below a uniform draw.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, Solve, UPLO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::liouville::lowering_operators;
use crate::model::ElectronicCouplings;
use crate::operators::{self, C64, I, ONE, ZERO};
use crate::params::{Scheme, SystemParams};
use crate::sparse::CsrMatrix;

pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

/// Axial normal modes of `n_ions` equal charges in a harmonic well, sorted
/// by frequency, in units of the centre-of-mass frequency. Column m of the
/// returned matrix is the participation vector of mode m.
pub fn normal_modes(n_ions: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    if n_ions == 0 {
        return Err(Error::InvalidParams("a chain needs at least one ion".into()));
    }
    let u = equilibrium_positions(n_ions)?;
    let mut hess = Array2::<f64>::zeros((n_ions, n_ions));
    for i in 0..n_ions {
        hess[[i, i]] = 1.0;
        for j in 0..n_ions {
            if i != j {
                let k = 2.0 / (u[i] - u[j]).abs().powi(3);
                hess[[i, i]] += k;
                hess[[i, j]] = -k;
            }
        }
    }
    let (vals, mut vecs) = hess
        .eigh(UPLO::Upper)
        .map_err(|e| Error::SolverFailure(format!("Hessian diagonalization failed: {e}")))?;
    for m in 0..n_ions {
        let lead = vecs.column(m).iter().copied().find(|v| v.abs() > 1e-12).unwrap_or(1.0);
        if lead < 0.0 {
            vecs.column_mut(m).mapv_inplace(|v| -v);
        }
    }
    Ok((vals.iter().map(|v| v.sqrt()).collect(), vecs))
}

/// Newton solve of u_i − Σ_{j<i} (u_i − u_j)⁻² + Σ_{j>i} (u_j − u_i)⁻² = 0.
fn equilibrium_positions(n: usize) -> Result<Vec<f64>> {
    let mut u: Vec<f64> = (0..n).map(|i| (i as f64 - 0.5 * (n - 1) as f64) * 1.3).collect();
    for _ in 0..100 {
        let mut f = Array1::<f64>::zeros(n);
        let mut jac = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            f[i] = u[i];
            jac[[i, i]] = 1.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = u[i] - u[j];
                f[i] -= d.signum() / (d * d);
                let k = 2.0 / d.abs().powi(3);
                jac[[i, i]] += k;
                jac[[i, j]] -= k;
            }
        }
        if f.iter().all(|v| v.abs() < 1e-14) {
            return Ok(u);
        }
        let step = jac
            .solve(&f)
            .map_err(|e| Error::SolverFailure(format!("equilibrium solve failed: {e}")))?;
        for i in 0..n {
            u[i] -= step[i];
        }
    }
    Err(Error::SolverFailure("chain equilibrium did not converge".into()))
}

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub base: SystemParams,
    pub n_ions: usize,
    /// In units of the addressed mode's frequency, which is `base.nu`.
    pub mode_freqs: Vec<f64>,
    /// Rows are ions, columns modes.
    pub mode_vectors: Array2<f64>,
    pub n_max: Vec<usize>,
    pub addressed_mode: usize,
    pub dimension_cap: usize,
    pub scheme: Scheme,
}

impl ChainConfig {
    /// Linear chain; `addressed_mode` is a 0-based index into the sorted modes.
    pub fn linear_chain(base: SystemParams, n_ions: usize, addressed_mode: usize, n_max: Vec<usize>) -> Result<Self> {
        let (freqs, vectors) = normal_modes(n_ions)?;
        if addressed_mode >= n_ions {
            return Err(Error::InvalidParams(format!(
                "addressed mode {addressed_mode} out of range for {n_ions} modes"
            )));
        }
        let w0 = freqs[addressed_mode];
        let cfg = Self {
            base,
            n_ions,
            mode_freqs: freqs.iter().map(|w| w / w0).collect(),
            mode_vectors: vectors,
            n_max,
            addressed_mode,
            dimension_cap: DEFAULT_DIMENSION_CAP,
            scheme: Scheme::Robust,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn single_ion(base: SystemParams) -> Result<Self> {
        let n = base.n_max;
        Self::linear_chain(base, 1, 0, vec![n])
    }

    /// Factor dimensions: 3 per ion, then n_max + 1 per mode.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![3; self.n_ions];
        d.extend(self.n_max.iter().map(|n| n + 1));
        d
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let n = self.n_ions;
        if self.mode_freqs.len() != n || self.n_max.len() != n || self.mode_vectors.dim() != (n, n) {
            return Err(Error::InvalidParams("mode data must have one entry per ion".into()));
        }
        if self.mode_freqs.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParams("mode frequencies must be positive".into()));
        }
        if self.n_max.iter().any(|&m| m < 1) {
            return Err(Error::InvalidParams("each mode needs n_max ≥ 1".into()));
        }
        let gram = self.mode_vectors.t().dot(&self.mode_vectors);
        let defect = (&gram - &Array2::<f64>::eye(n)).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if defect > 1e-10 {
            return Err(Error::InvalidParams(format!("mode vectors not orthonormal (defect {defect:e})")));
        }
        let dim = self
            .dims()
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .unwrap_or(usize::MAX);
        if dim > self.dimension_cap {
            return Err(Error::DimensionCap { dim, cap: self.dimension_cap });
        }
        Ok(())
    }

    /// η_{i,m} = η b_{i,m} √(ν/ν_m).
    pub fn lamb_dicke(&self, ion: usize, mode: usize, eta: f64) -> f64 {
        eta * self.mode_vectors[[ion, mode]] / self.mode_freqs[mode].sqrt()
    }
}

/// Sparse operator acting as the given local matrices on their factors and as
/// the identity elsewhere.
fn embed(dims: &[usize], locals: &[(usize, &Array2<C64>)]) -> CsrMatrix {
    let dim: usize = dims.iter().product();
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let entries: Vec<Vec<(usize, usize, C64)>> = locals
        .iter()
        .map(|(_, m)| {
            m.indexed_iter()
                .filter(|(_, v)| **v != ZERO)
                .map(|((r, c), v)| (r, c, *v))
                .collect()
        })
        .collect();
    let mut trip = Vec::new();
    for col in 0..dim {
        let mut partial = vec![(col, ONE)];
        for ((factor, _), list) in locals.iter().zip(&entries) {
            let s = strides[*factor];
            let digit = (col / s) % dims[*factor];
            let mut next = Vec::new();
            for &(row, v) in &partial {
                for &(r, c, w) in list {
                    if c == digit {
                        next.push((row - digit * s + r * s, v * w));
                    }
                }
            }
            partial = next;
        }
        trip.extend(partial.into_iter().map(|(row, v)| (row, col, v)));
    }
    CsrMatrix::from_triplets(dim, dim, trip)
}

#[derive(Debug, Clone)]
pub struct JumpChannel {
    pub ion: usize,
    /// 0: decay to ↑, 1: decay to ↓.
    pub channel: usize,
    pub op: CsrMatrix,
}

#[derive(Debug, Clone)]
pub struct JumpModel {
    pub dims: Vec<usize>,
    pub n_ions: usize,
    pub hamiltonian: CsrMatrix,
    pub h_nh: CsrMatrix,
    pub jumps: Vec<JumpChannel>,
    /// Per mode, ⟨s|n_m|s⟩ for every basis state s.
    pub phonon_numbers: Vec<Vec<f64>>,
}

impl JumpModel {
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// ⟨n_m⟩ of a normalized state.
    pub fn mean_phonons(&self, psi: &[C64]) -> Vec<f64> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        self.phonon_numbers
            .iter()
            .map(|nm| nm.iter().zip(psi).map(|(n, z)| n * z.norm_sqr()).sum::<f64>() / norm)
            .collect()
    }

    /// Product state: every ion in |−⟩, mode m in |phonons[m]⟩.
    pub fn initial_state(&self, phonons: &[usize]) -> Result<Array1<C64>> {
        let modes = &self.dims[self.n_ions..];
        if phonons.len() != modes.len() || phonons.iter().zip(modes).any(|(n, d)| n >= d) {
            return Err(Error::InvalidParams("initial phonon numbers outside the truncation".into()));
        }
        let mut index = 0;
        for (k, &d) in self.dims.iter().enumerate() {
            let digit = if k < self.n_ions { 0 } else { phonons[k - self.n_ions] };
            index = index * d + digit;
        }
        let mut psi = Array1::zeros(self.dim());
        psi[index] = ONE;
        Ok(psi)
    }
}

/// H on the chain space at first order in η, and jump operators √(2γ)σ_{i,e}.
pub fn build_jump_model(cfg: &ChainConfig) -> Result<JumpModel> {
    cfg.validate()?;
    let p = &cfg.base;
    let dims = cfg.dims();
    let dim = cfg.dim();
    let n = cfg.n_ions;
    let el = ElectronicCouplings::new(p, cfg.scheme);
    let h_el = el.h_el();
    let mut h = CsrMatrix::zeros(dim, dim);
    for m in 0..n {
        let nm = operators::number(cfg.n_max[m] + 1) * C64::new(p.nu * cfg.mode_freqs[m], 0.0);
        h = h.add(&embed(&dims, &[(n + m, &nm)]));
    }
    for i in 0..n {
        h = h.add(&embed(&dims, &[(i, &h_el)]));
        for m in 0..n {
            let coupling = &el.a1 * C64::new(cfg.lamb_dicke(i, m, p.eta_a), 0.0)
                + &el.b1 * C64::new(cfg.lamb_dicke(i, m, p.eta_b), 0.0);
            if coupling.iter().all(|z| *z == ZERO) {
                continue;
            }
            let q = operators::position(cfg.n_max[m] + 1);
            h = h.add(&embed(&dims, &[(i, &coupling), (n + m, &q)]));
        }
    }

    let gamma = p.channel_coefficient();
    let amp = C64::new((2.0 * gamma).sqrt(), 0.0);
    let mut jumps = Vec::new();
    let mut h_nh = h.clone();
    for i in 0..n {
        for (c, sigma) in lowering_operators().iter().enumerate() {
            let s = sigma * amp;
            let sds = operators::dagger(&s).dot(&s) * C64::new(0.0, -0.5);
            h_nh = h_nh.add(&embed(&dims, &[(i, &sds)]));
            if gamma > 0.0 {
                jumps.push(JumpChannel { ion: i, channel: c, op: embed(&dims, &[(i, &s)]) });
            }
        }
    }

    let mut phonon_numbers = Vec::with_capacity(n);
    for m in 0..n {
        let stride: usize = dims[n + m + 1..].iter().product();
        let d = dims[n + m];
        phonon_numbers.push((0..dim).map(|s| ((s / stride) % d) as f64).collect());
    }
    Ok(JumpModel { dims, n_ions: n, hamiltonian: h, h_nh, jumps, phonon_numbers })
}

/// exp(A) for a small dense matrix by scaling and squaring a Taylor series.
fn expm_small(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a * C64::new(0.5f64.powi(squarings), 0.0);
    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=20 {
        term = term.dot(&b) * C64::new(1.0 / k as f64, 0.0);
        result = result + &term;
        if term.iter().all(|z| z.norm() < 1e-18) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

fn spectral_form(hess: &Array2<C64>) -> Option<(Array1<C64>, Array2<C64>, Array1<C64>)> {
    let (vals, vecs) = hess.eig().ok()?;
    let mut e1 = Array1::<C64>::zeros(hess.nrows());
    e1[0] = ONE;
    let w = vecs.solve(&e1).ok()?;
    let back = vecs.dot(&w) - &e1;
    let amplification = w.iter().map(|z| z.norm()).sum::<f64>();
    if back.iter().any(|z| z.norm() > 1e-12) || amplification > 1e4 {
        return None;
    }
    Some((vals, vecs, w))
}

/// Arnoldi basis of −iH_nh at the current state.
struct Krylov {
    basis: Vec<Vec<C64>>,
    hess: Array2<C64>,
    /// Eigen-decomposition of `hess` with V⁻¹e₁, when well conditioned.
    spectral: Option<(Array1<C64>, Array2<C64>, Array1<C64>)>,
    beta: f64,
    /// h_{m+1,m}; zero after an invariant subspace is found.
    residual: f64,
}

impl Krylov {
    fn new(h_nh: &CsrMatrix, psi: &[C64], max_dim: usize) -> Self {
        let beta = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut basis = vec![psi.iter().map(|z| z / beta).collect::<Vec<_>>()];
        let mut hess = Array2::<C64>::zeros((max_dim, max_dim));
        let mut w = vec![ZERO; psi.len()];
        for j in 0..max_dim {
            h_nh.matvec_into(&basis[j], &mut w);
            w.iter_mut().for_each(|z| *z *= -I);
            for _ in 0..2 {
                for (k, v) in basis.iter().enumerate() {
                    let c: C64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                    hess[[k, j]] += c;
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let h = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if h < 1e-13 || j + 1 == max_dim {
                let m = j + 1;
                let residual = if j + 1 == max_dim { h } else { 0.0 };
                let hess = hess.slice(ndarray::s![..m, ..m]).to_owned();
                let spectral = spectral_form(&hess);
                return Self { basis, hess, spectral, beta, residual };
            }
            hess[[j + 1, j]] = C64::new(h, 0.0);
            basis.push(w.iter().map(|z| z / h).collect());
        }
        unreachable!()
    }

    fn coefficients(&self, tau: f64) -> Array1<C64> {
        if let Some((vals, vecs, w)) = &self.spectral {
            let scaled: Array1<C64> = vals
                .iter()
                .zip(w.iter())
                .map(|(l, c)| (l * tau).exp() * c * self.beta)
                .collect();
            return vecs.dot(&scaled);
        }
        let e = expm_small(&(&self.hess * C64::new(tau, 0.0)));
        e.column(0).mapv(|z| z * self.beta)
    }

    fn norm_sqr(&self, tau: f64) -> f64 {
        self.coefficients(tau).iter().map(|z| z.norm_sqr()).sum()
    }

    fn error_estimate(&self, tau: f64) -> f64 {
        let c = self.coefficients(tau);
        self.residual * c[c.len() - 1].norm()
    }

    fn state(&self, tau: f64) -> Vec<C64> {
        let c = self.coefficients(tau);
        let mut out = vec![ZERO; self.basis[0].len()];
        for (v, ck) in self.basis.iter().zip(c.iter()) {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += ck * x);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOptions {
    /// Output times, strictly increasing, starting at or after t = 0.
    pub t_grid: Vec<f64>,
    pub krylov_dim: usize,
    /// Local error target of a step, relative to ‖ψ‖.
    pub tolerance: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Largest jump probability allowed in a single step.
    pub max_jump_probability: f64,
}

impl TrajectoryOptions {
    pub fn new(t_grid: Vec<f64>) -> Self {
        Self {
            t_grid,
            krylov_dim: 24,
            tolerance: 1e-9,
            max_step: 2.0,
            min_step: 1e-9,
            max_jump_probability: 0.1,
        }
    }

    pub fn uniform(t_max: f64, points: usize) -> Self {
        Self::new((0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub t: f64,
    pub ion: usize,
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub stream: u64,
    pub t_grid: Vec<f64>,
    /// mean_n[m][k]: ⟨n_m⟩ at t_grid[k].
    pub mean_n: Vec<Vec<f64>>,
    pub jumps: Vec<JumpEvent>,
    pub steps: usize,
    /// Squared norm of the unnormalized state at the end.
    pub final_norm: f64,
    /// Largest relative growth of ‖ψ‖² seen within a step; zero for exact
    /// non-Hermitian decay.
    pub max_norm_increase: f64,
}

/// One trajectory from `psi0`, drawing from stream `stream` of the ChaCha8
/// generator seeded with `seed`.
pub fn run_trajectory(
    model: &JumpModel,
    psi0: &Array1<C64>,
    seed: u64,
    stream: u64,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    let grid = &opts.t_grid;
    if grid.is_empty() || grid[0] < 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("trajectory grid must be increasing from t ≥ 0".into()));
    }
    if psi0.len() != model.dim() {
        return Err(Error::InvalidParams("initial state has the wrong dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n0 = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut psi: Vec<C64> = psi0.iter().map(|z| z / n0).collect();
    let mut threshold: f64 = rng.random();
    let mut t = 0.0;
    let mut next_out = 0;
    let n_modes = model.phonon_numbers.len();
    let mut rec = TrajectoryRecord {
        seed,
        stream,
        t_grid: grid.clone(),
        mean_n: vec![Vec::with_capacity(grid.len()); n_modes],
        jumps: Vec::new(),
        steps: 0,
        final_norm: 1.0,
        max_norm_increase: 0.0,
    };
    let record = |rec: &mut TrajectoryRecord, state: &[C64]| {
        for (m, v) in model.mean_phonons(state).into_iter().enumerate() {
            rec.mean_n[m].push(v);
        }
    };
    while next_out < grid.len() && grid[next_out] <= t {
        record(&mut rec, &psi);
        next_out += 1;
    }
    let t_end = grid[grid.len() - 1];
    let mut tau = opts.max_step;
    while next_out < grid.len() {
        let kr = Krylov::new(&model.h_nh, &psi, opts.krylov_dim.min(model.dim()));
        let norm0 = kr.beta * kr.beta;
        tau = (2.0 * tau).min(opts.max_step).min(t_end - t);
        loop {
            if tau < opts.min_step {
                return Err(Error::StepRuleViolation { dt: tau });
            }
            if kr.error_estimate(tau) > opts.tolerance * kr.beta {
                tau *= 0.5;
                continue;
            }
            let n1 = kr.norm_sqr(tau);
            if 1.0 - n1 / norm0 > opts.max_jump_probability {
                tau *= 0.5;
                continue;
            }
            break;
        }
        rec.steps += 1;
        let n_end = kr.norm_sqr(tau);
        rec.max_norm_increase = rec.max_norm_increase.max((n_end - norm0) / norm0);
        // Step length to the jump, if the norm crosses the threshold.
        let jump_at = if n_end <= threshold {
            let (mut lo, mut hi) = (0.0, tau);
            while hi - lo > 1e-12 * tau.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if kr.norm_sqr(mid) > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(hi)
        } else {
            None
        };
        let span = jump_at.unwrap_or(tau);
        while next_out < grid.len() && grid[next_out] <= t + span {
            record(&mut rec, &kr.state(grid[next_out] - t));
            next_out += 1;
        }
        psi = kr.state(span);
        t += span;
        if jump_at.is_some() {
            let candidates: Vec<Vec<C64>> = model.jumps.iter().map(|j| j.op.matvec(&psi)).collect();
            let weights: Vec<f64> = candidates
                .iter()
                .map(|v| v.iter().map(|z| z.norm_sqr()).sum())
                .collect();
            let total: f64 = weights.iter().sum();
            if total > 0.0 {
                let mut draw = rng.random::<f64>() * total;
                let mut pick = weights.len() - 1;
                for (k, w) in weights.iter().enumerate() {
                    if draw < *w {
                        pick = k;
                        break;
                    }
                    draw -= w;
                }
                let ch = &model.jumps[pick];
                rec.jumps.push(JumpEvent { t, ion: ch.ion, channel: ch.channel });
                let s = weights[pick].sqrt();
                psi = candidates[pick].iter().map(|z| z / s).collect();
            } else {
                let s = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                psi.iter_mut().for_each(|z| *z /= s);
            }
            threshold = rng.random();
        }
    }
    rec.final_norm = psi.iter().map(|z| z.norm_sqr()).sum();
    Ok(rec)
}

/// `count` trajectories on streams 0..count, run in parallel.
pub fn run_ensemble(
    model: &JumpModel,
    psi0: &Array1<C64>,
    seed: u64,
    count: usize,
    opts: &TrajectoryOptions,
) -> Result<Vec<TrajectoryRecord>> {
    (0..count as u64)
        .into_par_iter()
        .map(|s| run_trajectory(model, psi0, seed, s, opts))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAverage {
    pub t_grid: Vec<f64>,
    /// mean[m][k] and standard error stderr[m][k] of ⟨n_m⟩(t_k).
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub count: usize,
}

pub fn ensemble_average(records: &[TrajectoryRecord]) -> Result<EnsembleAverage> {
    if records.len() < 2 {
        return Err(Error::InvalidParams("ensemble average needs at least two records".into()));
    }
    let first = &records[0];
    if records
        .iter()
        .any(|r| r.t_grid != first.t_grid || r.mean_n.len() != first.mean_n.len())
    {
        return Err(Error::MismatchedGrids);
    }
    let n = records.len() as f64;
    let modes = first.mean_n.len();
    let points = first.t_grid.len();
    let mut mean = vec![vec![0.0; points]; modes];
    let mut stderr = vec![vec![0.0; points]; modes];
    for m in 0..modes {
        for k in 0..points {
            let mu = records.iter().map(|r| r.mean_n[m][k]).sum::<f64>() / n;
            let var = records.iter().map(|r| (r.mean_n[m][k] - mu).powi(2)).sum::<f64>() / (n - 1.0);
            mean[m][k] = mu;
            stderr[m][k] = (var / n).sqrt();
        }
    }
    Ok(EnsembleAverage { t_grid: first.t_grid.clone(), mean, stderr, count: records.len() })
}
