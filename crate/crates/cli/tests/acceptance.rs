//! One PASS/FAIL line per acceptance criterion, at the stated tolerances.
//! Runs without the libtest harness so the lines always reach the output.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use darkcool::chain::{self, ChainConfig, TrajectoryOptions};
use darkcool::fano::{self, ContinuumModel};
use darkcool::geometry;
use darkcool::liouville::{self, evolve_with, product_state};
use darkcool::model::eigenstate_residual;
use darkcool::raman::{self, RamanParams, ValidationOptions};
use darkcool::rates::{
    self, fit_power_law, log_grid, optimize_cooling_rate, robustness_exponents, OccupationSource, OptimizerOptions,
};
use darkcool::{build_liouvillian, condition_ratio, steady_state, Level, Scheme, SystemParams};
use darkcool_cli::config::{preset, Quantity};
use darkcool_cli::{point_params, run_scan, tasks};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// η ≤ 0.1, ΩA ≤ 0.5ν.
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

fn blue_sideband_cancellation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_closed, mut worst_ratio) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let p = draw(&mut rng, true);
        worst_closed = worst_closed.max(rates::aplus_closed_form(&p).unwrap().abs());
        let n = rates::project_rate_equation(&p, Scheme::Robust).unwrap();
        worst_ratio = worst_ratio.max(n.a_plus / n.a_minus);
    }
    (
        worst_closed <= 1e-12 && worst_ratio <= 1e-8,
        format!("50 draws: max |A+ closed| = {worst_closed:.2e}, max A+/A- projected = {worst_ratio:.2e}"),
    )
}

fn closed_numeric_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let p = draw(&mut rng, false);
        let scheme = [Scheme::Robust, Scheme::Eit, Scheme::Ssh][i % 3];
        let c = rates::closed_form_rates(&p, scheme).unwrap();
        let n = rates::project_rate_equation(&p, scheme).unwrap();
        worst = worst.max(rel(n.a_plus, c.a_plus)).max(rel(n.a_minus, c.a_minus));
    }
    (worst <= 1e-4, format!("100 points: max relative A± difference {worst:.2e}"))
}

fn consistency_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = draw(&mut rng, true);
        worst = worst.max(rel(rates::aminus_closed_form(&p).unwrap(), rates::cooling_rate_closed_form(&p)));
    }
    (worst <= 1e-12, format!("50 draws: max |A- − W|/W = {worst:.2e}"))
}

fn steady_state_purity() -> Outcome {
    let etas = [0.02, 0.05, 0.1];
    let mut ok = true;
    let mut margins = Vec::new();
    let mut residuals = Vec::new();
    for &eta in &etas {
        let p = SystemParams { eta_a: eta, n_max: 10, ..Default::default() }.with_condition_eta_b().unwrap();
        let ss = steady_state(&build_liouvillian(&p, Scheme::Robust).unwrap()).unwrap();
        ok &= ss.fidelity_target >= 1.0 - 5.0 * eta * eta;
        margins.push(format!("F({eta}) = {:.6}", ss.fidelity_target));
        residuals.push(eigenstate_residual(&p, Scheme::Robust).unwrap());
    }
    let slope = fit_power_law(&etas, &residuals).unwrap().slope;
    ok &= (slope - 2.0).abs() <= 0.2;
    (ok, format!("{}; residual slope {slope:.3}", margins.join(", ")))
}

fn robustness_exponents_check() -> Outcome {
    let fluct = log_grid(1e-3, 5e-2, 8);
    let base = SystemParams { gamma: 15.0, omega_a: 0.1, eta_b: 0.4, ..Default::default() };
    let slope = |omega_b: f64| {
        let p = SystemParams { omega_b, ..base.clone() }.with_condition_eta_a().unwrap();
        robustness_exponents(&p, &fluct, OccupationSource::RateEquation).unwrap().omega_b.slope().unwrap()
    };
    let (generic, resonant) = (slope(1.3), slope(1.0));
    (
        (generic - 2.0).abs() <= 0.3 && (resonant - 4.0).abs() <= 0.3,
        format!("ΔΩB exponent {generic:.3} at ΩB = 1.3ν, {resonant:.3} at ΩB = ν"),
    )
}

fn rate_magnitude() -> Outcome {
    let start = Instant::now();
    let base = SystemParams { gamma: 15.0, omega_a: 2.3, omega_b: 1.0, eta_b: 0.1, ..Default::default() };
    let best = optimize_cooling_rate(&base, &OptimizerOptions::default()).unwrap();
    let optimizer_ok = best.w >= 0.04;

    let out = run_scan(&preset("fig4").unwrap());
    let (w, wa) = (out.column("W").unwrap() - 2, out.column("W_analytic").unwrap() - 2);
    let ratios: Vec<(f64, f64)> = out.rows.iter().map(|r| (r.coords[0], r.values[wa] / r.values[w])).collect();
    let small_ok = (ratios[0].1 - 1.0).abs() <= 0.2;
    let star = ratios.iter().position(|(_, r)| (r - 1.0).abs() > 0.2);
    let departs = star.is_some_and(|k| ratios[k..].iter().all(|(_, r)| (r - 1.0).abs() > 0.2));
    let star_text = star.map_or("none".to_string(), |k| format!("{:.2}", ratios[k].0));
    (
        optimizer_ok && small_ok && departs && out.failed_rows() == 0,
        format!(
            "optimizer W = {:.4}ν at ΩA = {:.2}, ΩB = {:.3}, Δ = {:.1}; Fig. 4 ratio {:.3} at ΩA = {:.2}, |ratio − 1| > 0.2 from ΩA* = {star_text} ({:.0} s)",
            best.w,
            best.params.omega_a,
            best.params.omega_b,
            best.params.delta,
            ratios[0].1,
            ratios[0].0,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn scheme_comparison() -> Outcome {
    let cfg = preset("fig5").unwrap();
    let out = run_scan(&cfg);
    let w = out.column("W").unwrap() - 2;
    let half = out.rows.len() / 2;
    let (robust, eit) = out.rows.split_at(half);
    let mut worst = f64::INFINITY;
    let mut ok = out.failed_rows() == 0;
    for (r, e) in robust.iter().zip(eit) {
        ok &= r.scheme == Scheme::Robust && e.scheme == Scheme::Eit && r.coords == e.coords;
        ok &= r.values[w] >= e.values[w];
        worst = worst.min(r.values[w] / e.values[w]);
    }
    (ok, format!("{half} ΩA points: min W_robust/W_eit = {worst:.2}"))
}

fn fano_relation() -> Outcome {
    let (oa, ob) = (0.5, 1.0);
    let mut errors = Vec::new();
    let mut spacings = Vec::new();
    let mut ratio_dev = 0.0;
    let mut checked = 0;
    for modes in [250, 500, 1000, 2000] {
        let model = ContinuumModel::flat(oa, ob, 1.0, modes, -20.0, 20.0);
        let spec = fano::diagonalize_continuum(&model).unwrap();
        if modes == 2000 {
            (ratio_dev, checked) = fano::overlap_ratio_deviation(&spec, oa, ob, 0.2);
        }
        errors.push((fano::fano_zero(&spec, ob).unwrap() - ob).abs());
        spacings.push(model.grid_spacing());
    }
    let order = fit_power_law(&spacings, &errors).unwrap().slope;
    let bounded = errors.iter().zip(&spacings).all(|(e, dk)| e <= dk);
    (
        ratio_dev <= 0.01 && order >= 0.9 && bounded,
        format!(
            "M = 2000: max ratio deviation {ratio_dev:.2e} over {checked} states; zero error {:.2e} at Δk = {:.2e}, observed order {order:.2}",
            errors[3], spacings[3]
        ),
    )
}

fn raman_mapping() -> Outcome {
    let scaled: Vec<f64> = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&d| (raman::effective_params(&RamanParams::new(1.0, 1.0, d)).unwrap().1 - 2.0) * d * d)
        .collect();
    let theta_ok = scaled.iter().all(|s| (0.5..=2.0).contains(s));
    let ds = [25.0, 50.0, 100.0];
    let devs: Vec<f64> = ds
        .iter()
        .map(|&d| {
            raman::validate_elimination(&RamanParams::new(2.0, 0.001, d), &ValidationOptions::default())
                .unwrap()
                .max_deviation
        })
        .collect();
    let xs: Vec<f64> = ds.iter().map(|d| 2.0 / d).collect();
    let slope = fit_power_law(&xs, &devs).unwrap().slope;
    (
        theta_ok && (slope - 2.0).abs() <= 0.3,
        format!(
            "(ηB/ηp − 2)·Δ′² = {:.4}, {:.4}, {:.4}; deviation slope in Ωp/Δ′ {slope:.3}",
            scaled[0], scaled[1], scaled[2]
        ),
    )
}

fn geometry_identities() -> Outcome {
    let tilt = geometry::tilt_angle(1.0, 1.0).unwrap().to_degrees();
    let r45 = geometry::ratio_at_angle(std::f64::consts::FRAC_PI_4).unwrap();
    let mut round_trip = 0.0f64;
    let mut worst_sum = 0.0f64;
    for deg in 1..90 {
        let th = (deg as f64).to_radians();
        for k in 1..=40 {
            let ob = 0.05 * k as f64;
            let tp = geometry::optimal_axis(th, ob, 1.0).unwrap();
            let want = condition_ratio(1.0, ob).unwrap();
            round_trip = round_trip.max(rel(geometry::multiaxial_ratio(th, tp).unwrap(), want));
            worst_sum = worst_sum.max((th + tp).to_degrees());
        }
    }
    (
        (tilt - 60.0).abs() < 1e-12 && (r45 - 2.0 * 2f64.sqrt()).abs() < 1e-15 && round_trip <= 1e-10 && worst_sum <= 90.0,
        format!("θ(ΩB=ν) = {tilt:.12}°, ratio(45°) = {r45:.15}, round trip {round_trip:.1e}, max θ+θ′ = {worst_sum:.2}°"),
    )
}

fn mcwf_oracle() -> Outcome {
    let start = Instant::now();
    let p = SystemParams { gamma: 15.0, omega_a: 2.3, omega_b: 1.0, eta_b: 0.1, n_max: 6, ..Default::default() }
        .with_condition_eta_a()
        .unwrap();
    let model = chain::build_jump_model(&ChainConfig::single_ion(p.clone()).unwrap()).unwrap();
    let psi0 = model.initial_state(&[1]).unwrap();
    let opts = TrajectoryOptions::uniform(100.0, 11);
    let records = chain::run_ensemble(&model, &psi0, 1, 500, &opts).unwrap();
    let avg = chain::ensemble_average(&records).unwrap();
    let l = build_liouvillian(&p, Scheme::Robust).unwrap();
    let me = evolve_with(&l.order0.add(&l.order1), &l.space, &product_state(&l.space, Level::Minus, 1), &opts.t_grid)
        .unwrap();
    let mut worst_z = 0.0f64;
    let mut single_ok = true;
    for k in 0..opts.t_grid.len() {
        let diff = (avg.mean[0][k] - me[k].mean_n).abs();
        let se = avg.stderr[0][k];
        if se == 0.0 {
            single_ok &= diff < 1e-12;
        } else {
            worst_z = worst_z.max(diff / se);
        }
    }
    single_ok &= worst_z <= 3.0;
    let single_time = start.elapsed().as_secs_f64();

    // Fig. 9 chain with fewer trajectories than the preset; ordering only.
    let start = Instant::now();
    let mut cfg = preset("fig9").unwrap();
    cfg.mcwf.trajectories = 40;
    let run = tasks::run_mcwf(&cfg).unwrap();
    let last: Vec<f64> = run.average.mean.iter().map(|m| *m.last().unwrap()).collect();
    let addressed = cfg.mcwf.addressed_mode;
    let cooled = last.iter().all(|n| *n < 0.5);
    let lowest = last.iter().enumerate().all(|(m, n)| m == addressed || *n > last[addressed]);
    (
        single_ok && cooled && lowest,
        format!(
            "500 single-ion trajectories: max |z| = {worst_z:.2} ({single_time:.0} s); 3-ion ({} traj, dim {}) final ⟨n⟩ = [{:.4}, {:.4}, {:.4}], addressed mode {addressed} ({:.0} s)",
            run.records.len(),
            run.dimension,
            last[0],
            last[1],
            last[2],
            start.elapsed().as_secs_f64()
        ),
    )
}

fn phase_preset() -> Outcome {
    let cfg = preset("fig7").unwrap();
    let out = run_scan(&cfg);
    let (n, w) = (
        cfg.quantities.iter().position(|q| *q == Quantity::NSs).unwrap(),
        cfg.quantities.iter().position(|q| *q == Quantity::W).unwrap(),
    );
    let base = point_params(&cfg, Scheme::Robust, &[]).unwrap();
    let baseline_n = liouville::steady_state_checked(&base, Scheme::Robust, cfg.truncation_check).unwrap().result.mean_n;
    let baseline_w = liouville::relaxation_rate(&build_liouvillian(&base, Scheme::Robust).unwrap(), 1).unwrap().rate;
    let zero_rows: Vec<_> = out.rows.iter().filter(|r| r.coords[0] == 0.0).collect();
    let worst = zero_rows
        .iter()
        .map(|r| (r.values[n] - baseline_n).abs().max((r.values[w] - baseline_w).abs()))
        .fold(0.0f64, f64::max);
    (
        !zero_rows.is_empty() && zero_rows.iter().all(|r| r.converged) && worst <= 1e-10,
        format!(
            "{} φ = 0 row(s): max difference {worst:.1e} from baseline n_ss = {baseline_n:.6e}, W = {baseline_w:.6e}",
            zero_rows.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("blue-sideband cancellation", blue_sideband_cancellation),
        ("closed-form/numeric rate agreement", closed_numeric_agreement),
        ("consistency identity A- = W", consistency_identity),
        ("steady-state purity", steady_state_purity),
        ("robustness exponents", robustness_exponents_check),
        ("rate magnitude and Fig. 4 divergence", rate_magnitude),
        ("scheme comparison (Fig. 5)", scheme_comparison),
        ("Fano relation", fano_relation),
        ("Raman mapping", raman_mapping),
        ("geometry", geometry_identities),
        ("MCWF oracle", mcwf_oracle),
        ("phase preset", phase_preset),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let (ok, detail) = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            });
        println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        failures += usize::from(!ok);
    }
    if failures > 0 {
        println!("acceptance: {failures} criterion/criteria failed");
        std::process::exit(1);
    }
}
