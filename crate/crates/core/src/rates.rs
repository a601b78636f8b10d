//! Heating and cooling rates of the phonon population.
//!
//! The numeric route eliminates the electronic dynamics to second order in η:
//! the generator PL2P + PL1(−L0⁻¹)L1P acting on |−⟩⟨−|⊗|n⟩⟨n| gives a
//! tridiagonal population flow whose off-diagonals are (n+1)A+ and nA−.
//! The closed forms are the corresponding Lorentzian sideband expressions.

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;

use crate::error::{Error, Result};
use crate::liouville::{self, build_liouvillian, product_state, SuperOp, NULL_TOLERANCE};
use crate::model::{self, condition_violation};
use crate::operators::{C64, ONE, ZERO};
use crate::optimize::{self, Bound};
use crate::params::{Level, Scheme, SystemParams};

/// Fock truncation used for the projection; flows are read for n = 0..=4.
pub const PROJECTION_N_MAX: usize = 6;
const FLOW_STATES: usize = 5;

/// Perturbative guard on Ω·η for the optimizer.
pub const PERTURBATIVE_GUARD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMethod {
    ClosedForm,
    NumericProjection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCoefficients {
    pub a_plus: f64,
    pub a_minus: f64,
    pub w: f64,
    pub n_ss: f64,
    pub method: RateMethod,
}

impl RateCoefficients {
    pub fn new(a_plus: f64, a_minus: f64, method: RateMethod) -> Self {
        let w = a_minus - a_plus;
        Self {
            a_plus,
            a_minus,
            w,
            n_ss: a_plus / w,
            method,
        }
    }
}

/// Parameters seen by the closed forms for a given scheme: EIT has no B
/// coupling, SSh no A-motional term.
fn scheme_view(p: &SystemParams, scheme: Scheme) -> SystemParams {
    let mut q = p.clone();
    match scheme {
        Scheme::Robust => {}
        Scheme::Eit => {
            q.omega_b = 0.0;
            q.eta_b = 0.0;
        }
        Scheme::Ssh => q.eta_a = 0.0,
    }
    q
}

fn sideband(p: &SystemParams, nu: f64) -> Result<f64> {
    let gamma = p.effective_gamma();
    if p.omega_a == 0.0 {
        return Err(Error::PerturbativeUndefined("ΩA = 0"));
    }
    if gamma == 0.0 {
        return Err(Error::PerturbativeUndefined("Γ = 0"));
    }
    let oa2 = p.omega_a * p.omega_a;
    let dp = p.delta_plus();
    let de = p.delta_e();
    let num = 2.0 * p.eta_a * (nu + p.omega_b) - p.eta_b * p.omega_b;
    let x = 0.5 * oa2 - (nu + dp) * (nu + de);
    let den = 4.0 * gamma * gamma * (nu + dp).powi(2) + 4.0 * x * x;
    Ok(num * num * oa2 * gamma / den)
}

/// A+ = [2ηA(ν+ΩB) − ηBΩB]² ΩA²Γ / [4Γ²(ν+δ+)² + 4(ΩA²/2 − (ν+δ+)(ν+δe))²].
pub fn aplus_closed_form(p: &SystemParams) -> Result<f64> {
    sideband(p, p.nu)
}

/// A+ with ν → −ν.
pub fn aminus_closed_form(p: &SystemParams) -> Result<f64> {
    sideband(p, -p.nu)
}

/// W = 4ηA²ν²ΩA²Γ / [Γ²(ν−δ+)² + (ΩA²/2 − (ν−δ+)(ν−δe))²], valid on the
/// cancellation condition.
pub fn cooling_rate_closed_form(p: &SystemParams) -> f64 {
    if let Some(v) = condition_violation(p) {
        if v > 1e-6 {
            log::warn!("closed-form W evaluated off the cancellation condition (relative violation {v:e})");
        }
    }
    let g = p.effective_gamma();
    let nu = p.nu;
    let oa2 = p.omega_a * p.omega_a;
    let a = nu - p.delta_plus();
    let x = 0.5 * oa2 - a * (nu - p.delta_e());
    4.0 * p.eta_a * p.eta_a * nu * nu * oa2 * g / (g * g * a * a + x * x)
}

pub fn closed_form_rates(p: &SystemParams, scheme: Scheme) -> Result<RateCoefficients> {
    let q = scheme_view(p, scheme);
    Ok(RateCoefficients::new(
        aplus_closed_form(&q)?,
        aminus_closed_form(&q)?,
        RateMethod::ClosedForm,
    ))
}

/// Numeric second-order elimination on a Fock space of [`PROJECTION_N_MAX`].
pub fn project_rate_equation(params: &SystemParams, scheme: Scheme) -> Result<RateCoefficients> {
    let p = params.clone().with_n_max(PROJECTION_N_MAX);
    let l = build_liouvillian(&p, scheme)?;
    let flow = population_flow(&l)?;
    rates_from_flow(&flow)
}

/// Blocks of L0, which maps |a,n⟩⟨b,m| into the same (n, m) block.
struct BlockedL0<'a> {
    l: &'a SuperOp,
}

impl BlockedL0<'_> {
    fn vec_index(&self, a: usize, n: usize, b: usize, m: usize) -> usize {
        let nf = self.l.space.n_fock;
        (a * nf + n) * self.l.space.dim + b * nf + m
    }

    fn block(&self, n: usize, m: usize) -> Array2<C64> {
        let mut blk = Array2::zeros((9, 9));
        let mut local = std::collections::HashMap::with_capacity(9);
        for a in 0..3 {
            for b in 0..3 {
                local.insert(self.vec_index(a, n, b, m), a * 3 + b);
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                let row = self.vec_index(a, n, b, m);
                for (col, v) in self.l.order0.row(row) {
                    let j = *local.get(&col).expect("L0 couples different motional blocks");
                    blk[[a * 3 + b, j]] = v;
                }
            }
        }
        blk
    }

    /// L0⁻¹ on the block, restricted to traceless matrices when n == m.
    fn solve(&self, n: usize, m: usize, x: &Array1<C64>) -> Result<Array1<C64>> {
        let blk = self.block(n, m);
        if n != m {
            return blk
                .solve(x)
                .map_err(|e| Error::SolverFailure(format!("L0 block ({n},{m}) is singular: {e}")));
        }
        // Bordered system with the dark-state null vector and the trace functional.
        let mut big = Array2::zeros((10, 10));
        big.slice_mut(ndarray::s![..9, ..9]).assign(&blk);
        big[[0, 9]] = ONE;
        for d in [0, 4, 8] {
            big[[9, d]] = ONE;
        }
        let mut rhs = Array1::zeros(10);
        rhs.slice_mut(ndarray::s![..9]).assign(x);
        let y = big
            .solve(&rhs)
            .map_err(|_| Error::NullSpaceMismatch { defect: f64::INFINITY })?;
        Ok(y.slice(ndarray::s![..9]).to_owned())
    }
}

fn check_null_space(l: &SuperOp) -> Result<()> {
    let scale = l.order0.max_abs().max(1.0);
    let d = l.space.dim;
    let mut defect = 0.0f64;
    for n in 0..l.space.n_fock {
        let rho = product_state(&l.space, Level::Minus, n);
        let right = l.order0.matvec(rho.as_slice().unwrap());
        defect = defect.max(right.iter().map(|z| z.norm()).fold(0.0, f64::max));
        // left null vector: electronic trace of the (n, n) block
        let mut left = vec![ZERO; d * d];
        for a in 0..3 {
            let i = l.space.index(level_of(a), n);
            left[i * d + i] = ONE;
        }
        let image = l.order0.vecmat(&left);
        defect = defect.max(image.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    if defect > NULL_TOLERANCE * scale {
        return Err(Error::NullSpaceMismatch { defect: defect / scale });
    }
    Ok(())
}

fn level_of(a: usize) -> Level {
    match a {
        0 => Level::Minus,
        1 => Level::Plus,
        _ => Level::Excited,
    }
}

/// M[j][k]: rate of population flow into |n=j⟩ from |−⟩⟨−|⊗|k⟩⟨k|, for
/// k = 0..=4 and all j.
pub fn population_flow(l: &SuperOp) -> Result<Array2<f64>> {
    check_null_space(l)?;
    let nf = l.space.n_fock;
    if nf < FLOW_STATES + 2 {
        return Err(Error::InvalidParams(format!(
            "projection needs n_max ≥ {}",
            FLOW_STATES + 1
        )));
    }
    let d = l.space.dim;
    let blocks = BlockedL0 { l };
    let mut flow = Array2::zeros((nf, FLOW_STATES));
    for k in 0..FLOW_STATES {
        let rho = product_state(&l.space, Level::Minus, k);
        let x = l.order1.matvec(rho.as_slice().unwrap());
        let mut y = vec![ZERO; d * d];
        for n in 0..nf {
            for m in 0..nf {
                let idx: Vec<usize> = (0..9).map(|i| blocks.vec_index(i / 3, n, i % 3, m)).collect();
                let xb = Array1::from_iter(idx.iter().map(|&i| x[i]));
                if xb.iter().all(|z| *z == ZERO) {
                    continue;
                }
                let yb = blocks.solve(n, m, &xb)?;
                for (t, &i) in idx.iter().enumerate() {
                    y[i] = yb[t];
                }
            }
        }
        let l1y = l.order1.matvec(&y);
        let l2r = l.order2.matvec(rho.as_slice().unwrap());
        for j in 0..nf {
            let mut s = 0.0;
            for a in 0..3 {
                let i = blocks.vec_index(a, j, a, j);
                s += (l2r[i] - l1y[i]).re;
            }
            flow[[j, k]] = s;
        }
    }
    Ok(flow)
}

/// Reads A± off the flow matrix and checks the n-linearity of every entry.
pub fn rates_from_flow(flow: &Array2<f64>) -> Result<RateCoefficients> {
    let k_max = flow.ncols() - 1;
    let plus: Vec<f64> = (0..k_max).map(|k| flow[[k + 1, k]] / (k + 1) as f64).collect();
    let minus: Vec<f64> = (1..=k_max).map(|k| flow[[k - 1, k]] / k as f64).collect();
    let a_plus = plus.iter().sum::<f64>() / plus.len() as f64;
    let a_minus = minus.iter().sum::<f64>() / minus.len() as f64;
    let scale = a_plus.abs().max(a_minus.abs());
    if scale == 0.0 {
        return Err(Error::NonlinearFlow { spread: 0.0 });
    }
    let mut spread = 0.0f64;
    for v in &plus {
        spread = spread.max((v - a_plus).abs());
    }
    for v in &minus {
        spread = spread.max((v - a_minus).abs());
    }
    for k in 0..=k_max {
        let want = -((k + 1) as f64 * a_plus + k as f64 * a_minus);
        spread = spread.max((flow[[k, k]] - want).abs() / (2 * k + 1) as f64);
    }
    let spread = spread / scale;
    if spread > 1e-6 {
        return Err(Error::NonlinearFlow { spread });
    }
    // Round-off below the spread tolerance cannot make a rate negative.
    let clip = |v: f64| if v < 0.0 && -v <= 1e-9 * scale { 0.0 } else { v };
    Ok(RateCoefficients::new(
        clip(a_plus),
        clip(a_minus),
        RateMethod::NumericProjection,
    ))
}

/// One point of the two-peak family δe + δ+ = 3ν, (δe − δ+)² + 2ΩA² = ν²,
/// which puts the dressed states at ν and 2ν.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPeakPoint {
    pub delta_e: f64,
    pub delta_plus: f64,
    pub omega_a: f64,
    /// ΩA = 0: the dressed states are the bare ones.
    pub degenerate: bool,
}

impl TwoPeakPoint {
    /// Applies the placement: ΩB = δ+, Δ = δe − ΩB/2.
    pub fn apply(&self, base: &SystemParams) -> SystemParams {
        SystemParams {
            omega_b: self.delta_plus,
            delta: self.delta_e - 0.5 * self.delta_plus,
            omega_a: self.omega_a,
            ..base.clone()
        }
    }
}

/// Member of the family with δe − δ+ = `split`.
pub fn two_peak_placement(nu: f64, split: f64) -> Result<TwoPeakPoint> {
    if nu <= 0.0 {
        return Err(Error::InvalidParams("nu must be > 0".into()));
    }
    if split.abs() > nu {
        return Err(Error::NoRealOmegaA(split.abs()));
    }
    let omega_a = (0.5 * (nu * nu - split * split)).max(0.0).sqrt();
    Ok(TwoPeakPoint {
        delta_e: 0.5 * (3.0 * nu + split),
        delta_plus: 0.5 * (3.0 * nu - split),
        omega_a,
        degenerate: omega_a == 0.0,
    })
}

/// Δ that puts the lower dressed state on the red sideband,
/// ΩA² = 2(ν − δ+)(ν − δe). Undefined at ΩB = ν.
pub fn resonance_detuning(p: &SystemParams) -> Result<f64> {
    let a = p.nu - p.omega_b;
    if a == 0.0 {
        return Err(Error::PerturbativeUndefined("resonance needs ΩB ≠ ν"));
    }
    let delta_e = p.nu - p.omega_a * p.omega_a / (2.0 * a);
    Ok(delta_e - 0.5 * p.omega_b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
}

/// Least-squares line through (ln x, ln y).
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 3 {
        return Err(Error::PoorFit { r2: 0.0, slope: f64::NAN, points: pts.len() });
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerLawFit {
        slope,
        intercept: my - slope * mx,
        r2,
        points: xs.iter().copied().zip(ys.iter().copied()).collect(),
    })
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OccupationSource {
    /// ⟨n⟩ = A+/(A− − A+) from the projected rate equation.
    #[default]
    RateEquation,
    /// Full-Liouvillian ⟨n⟩ minus its unperturbed value.
    Liouvillian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Exponent {
    Fitted(PowerLawFit),
    /// ⟨n⟩ stays at its baseline over the whole grid.
    Insensitive,
}

impl Exponent {
    pub fn slope(&self) -> Option<f64> {
        match self {
            Exponent::Fitted(f) => Some(f.slope),
            Exponent::Insensitive => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub omega_a: Exponent,
    pub omega_b: Exponent,
    pub baseline_n: f64,
}

fn occupation(p: &SystemParams, source: OccupationSource) -> Result<f64> {
    match source {
        OccupationSource::RateEquation => Ok(project_rate_equation(p, Scheme::Robust)?.n_ss),
        OccupationSource::Liouvillian => {
            Ok(liouville::steady_state(&build_liouvillian(p, Scheme::Robust)?)?.mean_n)
        }
    }
}

/// Exponents of ⟨n⟩ against relative Rabi-frequency errors ΩX → ΩX(1+ε),
/// each perturbed alone with every other parameter held.
pub fn robustness_exponents(
    params: &SystemParams,
    fluctuations: &[f64],
    source: OccupationSource,
) -> Result<RobustnessReport> {
    let baseline_n = occupation(params, source)?;
    let subtract = match source {
        OccupationSource::RateEquation => 0.0,
        OccupationSource::Liouvillian => baseline_n,
    };
    let axis = |set: &dyn Fn(&mut SystemParams, f64)| -> Result<Exponent> {
        let mut ys = Vec::with_capacity(fluctuations.len());
        for &eps in fluctuations {
            let mut p = params.clone();
            set(&mut p, eps);
            ys.push(occupation(&p, source)? - subtract);
        }
        let scale = baseline_n.abs().max(1.0);
        if ys.iter().all(|y| y.abs() <= 1e-14 * scale) {
            return Ok(Exponent::Insensitive);
        }
        let ys: Vec<f64> = ys.iter().map(|y| y.abs()).collect();
        let fit = fit_power_law(fluctuations, &ys)?;
        if fit.r2 < 0.95 {
            return Err(Error::PoorFit { r2: fit.r2, slope: fit.slope, points: ys.len() });
        }
        Ok(Exponent::Fitted(fit))
    };
    let omega_a = axis(&|p, e| p.omega_a *= 1.0 + e)?;
    let omega_b = axis(&|p, e| p.omega_b *= 1.0 + e)?;
    Ok(RobustnessReport { omega_a, omega_b, baseline_n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateObjective {
    /// Integrated relaxation rate of the full Liouvillian from |−,1⟩.
    #[default]
    Numeric,
    /// Closed-form W; unbounded near ΩB = ν.
    ClosedForm,
}

#[derive(Debug, Clone)]
pub struct OptimizerOptions {
    pub objective: RateObjective,
    pub n_max: usize,
    pub omega_a: Bound,
    pub omega_b: Bound,
    pub delta: Bound,
    pub grid_points: usize,
    pub sweeps: usize,
    pub max_iter: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            objective: RateObjective::Numeric,
            n_max: 5,
            omega_a: Bound::new(0.05, 20.0),
            omega_b: Bound::new(0.05, 1.99),
            delta: Bound::new(-100.0, 100.0),
            grid_points: 21,
            sweeps: 4,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizedRate {
    pub params: SystemParams,
    pub w: f64,
    pub evaluations: usize,
}

/// Candidate on the condition with ηB held; `None` if it breaks the Ω·η guard.
fn guarded(base: &SystemParams, x: &[f64]) -> Option<SystemParams> {
    let p = SystemParams {
        omega_a: x[0],
        omega_b: x[1],
        delta: x[2],
        ..base.clone()
    }
    .with_condition_eta_a()
    .ok()?;
    if p.omega_a * p.eta_a >= PERTURBATIVE_GUARD || p.omega_b * p.eta_b >= PERTURBATIVE_GUARD {
        return None;
    }
    Some(p)
}

fn objective_value(p: &SystemParams, objective: RateObjective) -> f64 {
    match objective {
        RateObjective::ClosedForm => cooling_rate_closed_form(p),
        RateObjective::Numeric => build_liouvillian(p, Scheme::Robust)
            .and_then(|l| liouville::relaxation_rate(&l, 1))
            .map(|r| r.rate)
            .unwrap_or(f64::NEG_INFINITY),
    }
}

/// Maximizes W over (ΩA, ΩB, Δ) at fixed Γ and ηB, with ηA from the
/// cancellation condition and both Ω·η products below the guard.
pub fn optimize_cooling_rate(base: &SystemParams, opts: &OptimizerOptions) -> Result<OptimizedRate> {
    let base = base.clone().with_n_max(opts.n_max);
    base.validate()?;
    let f = |x: &[f64]| match guarded(&base, x) {
        Some(p) => objective_value(&p, opts.objective),
        None => f64::NEG_INFINITY,
    };
    let bounds = [opts.omega_a, opts.omega_b, opts.delta];
    let start = [base.omega_a, base.omega_b, base.delta];
    let coarse = optimize::coordinate_search(&f, &start, &bounds, opts.grid_points, opts.sweeps);
    let steps: Vec<f64> = bounds.iter().map(|b| 0.02 * (b.hi - b.lo)).collect();
    let fine = optimize::nelder_mead(&f, &coarse.x, &steps, &bounds, opts.max_iter, 1e-10);
    let best = if fine.value >= coarse.value { &fine } else { &coarse };
    let params = guarded(&base, &best.x)
        .ok_or_else(|| Error::SolverFailure("optimizer found no point inside the guard".into()))?;
    Ok(OptimizedRate {
        params,
        w: best.value,
        evaluations: coarse.evaluations + fine.evaluations,
    })
}

/// Closed-form W over the numeric relaxation rate at the same parameters.
pub fn analytic_numeric_ratio(p: &SystemParams) -> Result<f64> {
    let numeric = liouville::relaxation_rate(&build_liouvillian(p, Scheme::Robust)?, 1)?.rate;
    Ok(cooling_rate_closed_form(p) / numeric)
}

/// Convenience: dressed-state energies of a two-peak point.
pub fn two_peak_energies(point: &TwoPeakPoint, nu: f64) -> (f64, f64) {
    let p = point.apply(&SystemParams { nu, ..Default::default() });
    let ds = model::dressed_states(&p);
    (ds.delta_d1, ds.delta_d2)
}
