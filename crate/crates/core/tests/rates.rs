use darkcool::liouville::{build_liouvillian, relaxation_rate, steady_state};
use darkcool::rates::{
    aminus_closed_form, aplus_closed_form, closed_form_rates, cooling_rate_closed_form, fit_power_law, log_grid,
    optimize_cooling_rate, project_rate_equation, resonance_detuning, robustness_exponents, two_peak_placement,
    Exponent, OccupationSource, OptimizerOptions, RateMethod, RateObjective,
};
use darkcool::{dressed_states, DecayConvention, Error, Scheme, SystemParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Perturbative draw: η ≤ 0.1, ΩA ≤ 0.5, Γ ∈ [1, 20].
fn draw(rng: &mut ChaCha8Rng, on_condition: bool) -> SystemParams {
    let p = SystemParams {
        gamma: rng.random_range(1.0..20.0),
        delta: rng.random_range(-3.0..3.0),
        omega_a: rng.random_range(0.05..0.5),
        omega_b: rng.random_range(0.2..2.5),
        eta_a: rng.random_range(0.0..0.1),
        eta_b: rng.random_range(0.0..0.1),
        ..Default::default()
    };
    if on_condition {
        p.with_condition_eta_a().unwrap()
    } else {
        p
    }
}

// Frozen values from a direct Python evaluation of the sideband formula.
#[test]
fn closed_form_frozen_values() {
    let p = SystemParams { eta_a: 0.1, eta_b: 0.0, omega_b: 1.0, omega_a: 0.3, gamma: 15.0, delta: 0.0, ..Default::default() };
    assert!(rel(aplus_closed_form(&p).unwrap(), 5.942345874736836e-05) < 1e-13);
    let pc = SystemParams { decay: DecayConvention::PerChannel, ..p.clone() };
    assert!(rel(aplus_closed_form(&pc).unwrap(), 2.992740919852591e-05) < 1e-13);

    let q = SystemParams { eta_a: 0.07, eta_b: 0.03, omega_b: 1.3, omega_a: 0.45, delta: 0.8, gamma: 7.0, ..Default::default() };
    assert!(rel(aplus_closed_form(&q).unwrap(), 9.792397415210817e-05) < 1e-13);
    assert!(rel(aminus_closed_form(&q).unwrap(), 7.230275343422184e-07) < 1e-12);
}

#[test]
fn closed_form_matches_projection_example() {
    let p = SystemParams { eta_a: 0.1, eta_b: 0.0, omega_b: 1.0, omega_a: 0.3, gamma: 15.0, delta: 0.0, ..Default::default() };
    let c = closed_form_rates(&p, Scheme::Robust).unwrap();
    let n = project_rate_equation(&p, Scheme::Robust).unwrap();
    assert!(c.a_plus > 0.0);
    assert!(rel(n.a_plus, c.a_plus) < 1e-6);
    assert_eq!(n.method, RateMethod::NumericProjection);
}

#[test]
fn blue_sideband_cancels_on_condition() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let p = draw(&mut rng, true);
        assert!(aplus_closed_form(&p).unwrap().abs() < 1e-12);
        let n = project_rate_equation(&p, Scheme::Robust).unwrap();
        assert!(n.a_plus <= 1e-8 * n.a_minus, "{p:?} {n:?}");
    }
}

#[test]
fn closed_form_agrees_with_projection_on_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100 {
        let p = draw(&mut rng, false);
        let scheme = [Scheme::Robust, Scheme::Eit, Scheme::Ssh][i % 3];
        let c = closed_form_rates(&p, scheme).unwrap();
        let n = project_rate_equation(&p, scheme).unwrap();
        assert!(rel(n.a_plus, c.a_plus) < 1e-6, "{scheme} {p:?}");
        assert!(rel(n.a_minus, c.a_minus) < 1e-6, "{scheme} {p:?}");
    }
}

#[test]
fn ssh_only_coupling_uses_the_eta_b_term() {
    let p = SystemParams { eta_a: 0.0, eta_b: 0.08, omega_a: 0.4, omega_b: 1.2, gamma: 5.0, ..Default::default() };
    let c = closed_form_rates(&p, Scheme::Robust).unwrap();
    let n = project_rate_equation(&p, Scheme::Robust).unwrap();
    assert!(c.a_plus > 0.0);
    assert!(rel(n.a_plus, c.a_plus) < 1e-6);
}

#[test]
fn aminus_on_condition_is_the_cooling_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let p = draw(&mut rng, true);
        assert!(rel(aminus_closed_form(&p).unwrap(), cooling_rate_closed_form(&p)) < 1e-12);
    }
}

#[test]
fn sideband_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let p = draw(&mut rng, false);
        // ν only enters explicitly, so A+(−ν) can be evaluated by hand
        let direct = {
            let g = p.effective_gamma();
            let nu = -p.nu;
            let num = 2.0 * p.eta_a * (nu + p.omega_b) - p.eta_b * p.omega_b;
            let x = 0.5 * p.omega_a.powi(2) - (nu + p.delta_plus()) * (nu + p.delta_e());
            num * num * p.omega_a.powi(2) * g / (4.0 * g * g * (nu + p.delta_plus()).powi(2) + 4.0 * x * x)
        };
        assert!(rel(aminus_closed_form(&p).unwrap(), direct) < 1e-12);
    }
}

#[test]
fn closed_form_errors_and_limits() {
    let p = SystemParams { omega_a: 0.0, ..Default::default() };
    assert!(matches!(aplus_closed_form(&p), Err(Error::PerturbativeUndefined(_))));
    let p = SystemParams { gamma: 0.0, ..Default::default() };
    assert!(matches!(aminus_closed_form(&p), Err(Error::PerturbativeUndefined(_))));
    let big = SystemParams { gamma: 1e8, omega_b: 1.3, ..Default::default() };
    let bigger = SystemParams { gamma: 1e10, ..big.clone() };
    let (a, b) = (aminus_closed_form(&big).unwrap(), aminus_closed_form(&bigger).unwrap());
    assert!(a < 1e-8 && rel(b / a, 1e-2) < 1e-6);
}

#[test]
fn resolved_limits_of_the_cooling_rate() {
    // on resonance ΩA² = 2(ν−δ+)(ν−δe)
    let base = SystemParams { omega_b: 0.6, omega_a: 0.9, eta_a: 0.03, gamma: 15.0, ..Default::default() };
    let delta = resonance_detuning(&base).unwrap();
    let p = SystemParams { delta, ..base };
    let w = cooling_rate_closed_form(&p);
    let g = p.effective_gamma();
    let want = 4.0 * p.eta_a.powi(2) * p.omega_a.powi(2) / (g * (1.0 - p.omega_b).powi(2));
    assert!(rel(w, want) < 1e-12);

    // δ+ → ν along the resonance branch: W → 8ηA²ν²/Γ
    let eps = 1e-4;
    let ob = 1.0 - eps;
    let oa = 2f64.sqrt() * eps;
    let p = SystemParams { omega_b: ob, omega_a: oa, eta_a: 0.03, gamma: 15.0, ..Default::default() };
    let p = SystemParams { delta: resonance_detuning(&p).unwrap(), ..p };
    assert!(rel(cooling_rate_closed_form(&p), 8.0 * 0.03f64.powi(2) / 15.0) < 1e-9);
    assert!(resonance_detuning(&SystemParams { omega_b: 1.0, ..Default::default() }).is_err());
}

#[test]
fn two_peak_examples() {
    let t = two_peak_placement(1.0, 0.0).unwrap();
    assert_eq!((t.delta_e, t.delta_plus), (1.5, 1.5));
    assert!(rel(t.omega_a, 1.0 / 2f64.sqrt()) < 1e-15);
    let t = two_peak_placement(1.0, 1.0).unwrap();
    assert!(t.degenerate && t.omega_a == 0.0);
    assert!(matches!(two_peak_placement(1.0, 1.2), Err(Error::NoRealOmegaA(_))));
}

#[test]
fn two_peak_family_puts_dressed_states_at_nu_and_two_nu() {
    for k in 0..=20 {
        let split = -0.95 + 0.095 * k as f64;
        let t = two_peak_placement(1.0, split).unwrap();
        let d = dressed_states(&t.apply(&SystemParams::default()));
        assert!((d.delta_d1 - 1.0).abs() < 1e-12, "{split} {d:?}");
        assert!((d.delta_d2 - 2.0).abs() < 1e-12);
    }
}

#[test]
fn robustness_exponents_generic_and_resonant() {
    let fluct = log_grid(1e-3, 5e-2, 8);
    let base = SystemParams { gamma: 15.0, omega_a: 0.1, omega_b: 1.3, eta_b: 0.4, ..Default::default() };
    let generic = robustness_exponents(&base.clone().with_condition_eta_a().unwrap(), &fluct, OccupationSource::RateEquation).unwrap();
    let sb = generic.omega_b.slope().unwrap();
    assert!((sb - 2.0).abs() < 0.3, "{sb}");
    assert_eq!(generic.omega_a, Exponent::Insensitive);

    let resonant = SystemParams { omega_b: 1.0, ..base }.with_condition_eta_a().unwrap();
    let r = robustness_exponents(&resonant, &fluct, OccupationSource::RateEquation).unwrap();
    let sb = r.omega_b.slope().unwrap();
    assert!((sb - 4.0).abs() < 0.3, "{sb}");
}

#[test]
fn unperturbed_point_reproduces_baseline() {
    let p = SystemParams { gamma: 15.0, omega_a: 0.1, omega_b: 1.3, eta_b: 0.4, ..Default::default() }
        .with_condition_eta_a()
        .unwrap();
    let r = robustness_exponents(&p, &[1e-3, 1e-2, 5e-2], OccupationSource::RateEquation).unwrap();
    let again = project_rate_equation(&p, Scheme::Robust).unwrap().n_ss;
    assert_eq!(r.baseline_n, again);
}

#[test]
fn power_law_fit() {
    let xs = log_grid(1e-3, 1e-1, 6);
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powi(3)).collect();
    let fit = fit_power_law(&xs, &ys).unwrap();
    assert!((fit.slope - 3.0).abs() < 1e-12 && fit.r2 > 0.999999);
    let noisy = [1.0, 5.0, 0.2, 3.0, 0.5];
    assert!(fit_power_law(&xs[..5], &noisy).map(|f| f.r2 < 0.95).unwrap());
    assert!(matches!(fit_power_law(&xs[..2], &ys[..2]), Err(Error::PoorFit { .. })));
}

#[test]
fn projected_occupation_matches_liouvillian() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..6 {
        let mut p = draw(&mut rng, false);
        p.eta_b = rng.random_range(0.0..0.05);
        p.eta_a = rng.random_range(0.01..0.05);
        p.n_max = 12;
        let r = project_rate_equation(&p, Scheme::Robust).unwrap();
        if r.w <= 0.0 || r.n_ss > 2.0 {
            continue;
        }
        let ss = steady_state(&build_liouvillian(&p, Scheme::Robust).unwrap()).unwrap();
        let eta = p.eta_a.max(p.eta_b);
        let tol = (0.1 * r.n_ss).max(5.0 * eta * eta);
        assert!((ss.mean_n - r.n_ss).abs() < tol, "{p:?} {} {}", ss.mean_n, r.n_ss);
    }
}

#[test]
fn integrated_rate_matches_projection_in_perturbative_regime() {
    let p = SystemParams { gamma: 15.0, omega_a: 0.4, omega_b: 1.3, eta_b: 0.05, delta: 1.0, n_max: 10, ..Default::default() }
        .with_condition_eta_a()
        .unwrap();
    let w_num = relaxation_rate(&build_liouvillian(&p, Scheme::Robust).unwrap(), 1).unwrap().rate;
    let w = project_rate_equation(&p, Scheme::Robust).unwrap().w;
    assert!(rel(w_num, w) < 0.1, "{w_num} {w}");
}

#[test]
fn projection_detects_a_broken_dark_state() {
    let p = SystemParams { phi: 0.5, ..Default::default() };
    assert!(matches!(project_rate_equation(&p, Scheme::Robust), Err(Error::NullSpaceMismatch { .. })));
    let p = SystemParams { gamma: 0.0, ..Default::default() };
    assert!(project_rate_equation(&p, Scheme::Robust).is_err());
}

#[test]
fn closed_form_optimizer_respects_the_guard() {
    let base = SystemParams { gamma: 15.0, eta_b: 0.1, omega_a: 1.0, omega_b: 1.3, delta: 2.0, ..Default::default() };
    let opts = OptimizerOptions { objective: RateObjective::ClosedForm, grid_points: 11, sweeps: 2, max_iter: 100, ..Default::default() };
    let best = optimize_cooling_rate(&base, &opts).unwrap();
    assert!(best.params.omega_a * best.params.eta_a < 0.2);
    assert!(best.params.omega_b * best.params.eta_b < 0.2);
    assert!(best.w.is_finite() && best.w > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn closed_form_rates_are_nonnegative(
        g in 0.5..20.0f64, d in -5.0..5.0f64, oa in 0.01..3.0f64, ob in -2.0..3.0f64,
        ea in 0.0..0.2f64, eb in 0.0..0.2f64,
    ) {
        let p = SystemParams { gamma: g, delta: d, omega_a: oa, omega_b: ob, eta_a: ea, eta_b: eb, ..Default::default() };
        let r = closed_form_rates(&p, Scheme::Robust).unwrap();
        prop_assert!(r.a_plus >= 0.0 && r.a_minus >= 0.0);
        if r.a_minus > r.a_plus {
            prop_assert!(r.n_ss >= 0.0);
        }
    }

    #[test]
    fn cancellation_iff_condition(ob in 0.1..3.0f64, ea in 0.01..0.1f64, ratio in 1.5..6.0f64) {
        let p = SystemParams { omega_b: ob, eta_a: ea, eta_b: ratio * ea, ..Default::default() };
        let on = (ratio - (2.0 / ob + 2.0)).abs() < 1e-12;
        let a = aplus_closed_form(&p).unwrap();
        prop_assert_eq!(a < 1e-20, on);
    }
}
