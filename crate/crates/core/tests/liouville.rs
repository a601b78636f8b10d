use darkcool::liouville::{
    self, build_dissipator, build_liouvillian, electronic_populations, evolve, evolve_with, mean_phonon,
    product_state, relaxation_rate, steady_state,
};
use darkcool::operators::{self, C64};
use darkcool::{Error, Level, Scheme, SystemParams};
use ndarray::Array2;
use ndarray_linalg::Eig;
use proptest::prelude::*;

fn generic() -> SystemParams {
    SystemParams {
        gamma: 7.0,
        delta: 1.5,
        omega_a: 1.1,
        omega_b: 1.3,
        eta_a: 0.06,
        eta_b: 0.13,
        phi: 0.4,
        eta_up: 0.08,
        eta_down: 0.05,
        n_max: 8,
        ..Default::default()
    }
}

fn random_density(d: usize, seed: u64) -> Array2<C64> {
    let mut s = seed.wrapping_add(0x9E3779B97F4A7C15);
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let a = Array2::from_shape_fn((d, d), |_| C64::new(next(), next()));
    let rho = a.dot(&operators::dagger(&a));
    let tr = operators::trace(&rho);
    rho / tr
}

fn vec_of(m: &Array2<C64>) -> Vec<C64> {
    m.iter().copied().collect()
}

fn unvec(v: Vec<C64>, d: usize) -> Array2<C64> {
    Array2::from_shape_vec((d, d), v).unwrap()
}

// Frozen values from an independent dense numpy implementation of the same
// master equation (full superoperator, np.linalg.solve with a trace row).
#[test]
fn steady_state_matches_dense_reference() {
    let l = build_liouvillian(&generic(), Scheme::Robust).unwrap();
    let ss = steady_state(&l).unwrap();
    assert!((ss.mean_n - 0.08451790911985643).abs() < 1e-10 * 0.0845, "{}", ss.mean_n);
}

#[test]
fn relaxation_rate_matches_dense_reference() {
    let l = build_liouvillian(&generic(), Scheme::Robust).unwrap();
    let r = relaxation_rate(&l, 1).unwrap();
    assert!((r.rate - 0.007016106335267561).abs() < 1e-9 * 0.007, "{}", r.rate);
}

#[test]
fn every_order_is_trace_preserving() {
    let p = generic();
    let l = build_liouvillian(&p, Scheme::Robust).unwrap();
    let d = l.space.dim;
    for seed in 0..20 {
        let rho = random_density(d, seed);
        for m in [&l.order0, &l.order1, &l.order2, &l.total] {
            let out = unvec(m.matvec(&vec_of(&rho)), d);
            assert!(operators::trace(&out).norm() < 1e-10);
        }
    }
}

#[test]
fn dissipator_is_trace_preserving_on_100_states() {
    let p = generic();
    let d = p.space().dim;
    let l0 = build_dissipator(&p, 0).unwrap();
    let l2 = build_dissipator(&p, 2).unwrap();
    for seed in 0..100 {
        let rho = random_density(d, 1000 + seed);
        for m in [&l0, &l2] {
            assert!(operators::trace(&unvec(m.matvec(&vec_of(&rho)), d)).norm() < 1e-12);
        }
    }
}

#[test]
fn recoil_vanishes_without_decay_lamb_dicke() {
    let p = SystemParams { eta_up: 0.0, eta_down: 0.0, ..generic() };
    assert_eq!(build_dissipator(&p, 2).unwrap().nnz(), 0);
}

#[test]
fn dissipator_rejects_order_one() {
    assert!(matches!(build_dissipator(&generic(), 1), Err(Error::InvalidParams(_))));
}

#[test]
fn hermiticity_is_preserved() {
    let l = build_liouvillian(&generic(), Scheme::Robust).unwrap();
    let d = l.space.dim;
    for seed in 0..10 {
        let rho = random_density(d, 50 + seed);
        let out = unvec(l.total.matvec(&vec_of(&rho)), d);
        assert!(operators::hermiticity_defect(&out) < 1e-12);
    }
}

#[test]
fn excited_population_decay_rates() {
    // Linewidth convention: |e⟩ decays at 2Γ. Per-channel convention: 4Γ.
    for (decay, factor) in [
        (darkcool::DecayConvention::Linewidth, 2.0),
        (darkcool::DecayConvention::PerChannel, 4.0),
    ] {
        let p = SystemParams { gamma: 3.0, decay, ..generic() };
        let d = p.space().dim;
        let l0 = build_dissipator(&p, 0).unwrap();
        let rho = product_state(&p.space(), Level::Excited, 0);
        let out = unvec(l0.matvec(&vec_of(&rho)), d);
        let i = p.space().index(Level::Excited, 0);
        assert!((out[[i, i]].re + factor * 3.0).abs() < 1e-12);
    }
}

#[test]
fn closed_system_has_imaginary_spectrum() {
    let p = SystemParams { gamma: 0.0, n_max: 3, ..generic() };
    let l = build_liouvillian(&p, Scheme::Robust).unwrap();
    let dense = l.total.to_dense();
    let ev = dense.eig().unwrap().0;
    assert!(ev.iter().all(|z| z.re.abs() < 1e-9));
}

#[test]
fn order0_null_space_is_dark_diagonal() {
    let p = SystemParams { phi: 0.0, n_max: 4, ..generic() };
    let l = build_liouvillian(&p, Scheme::Robust).unwrap();
    let d = l.space.dim;
    for n in 0..=4 {
        let rho = product_state(&l.space, Level::Minus, n);
        let out = l.order0.matvec(&vec_of(&rho));
        assert!(out.iter().all(|z| z.norm() < 1e-13));
    }
    // rank deficiency of L0 equals n_max + 1
    let dense = l.order0.to_dense();
    let ev = dense.eig().unwrap().0;
    let zeros = ev.iter().filter(|z| z.norm() < 1e-9).count();
    assert_eq!(zeros, 5, "d = {d}");
}

#[test]
fn order0_factorizes_on_product_states() {
    // L0 acting on (electronic ⊗ |n⟩⟨m|) stays in the same motional block.
    let p = SystemParams { n_max: 4, ..generic() };
    let l = build_liouvillian(&p, Scheme::Robust).unwrap();
    let nf = l.space.n_fock;
    let d = l.space.dim;
    let mut rho = Array2::zeros((d, d));
    rho[[l.space.index(Level::Plus, 2), l.space.index(Level::Excited, 1)]] = C64::new(1.0, 0.0);
    let out = unvec(l.order0.matvec(&vec_of(&rho)), d);
    for ((i, j), v) in out.indexed_iter() {
        if v.norm() > 1e-14 {
            assert_eq!((i % nf, j % nf), (2, 1));
        }
    }
}

#[test]
fn uncoupled_motion_is_degenerate() {
    let p = SystemParams { eta_a: 0.0, eta_b: 0.0, eta_up: 0.0, eta_down: 0.0, n_max: 5, ..generic() };
    let l = build_liouvillian(&p, Scheme::Robust).unwrap();
    assert!(matches!(steady_state(&l), Err(Error::DegenerateNullSpace { .. })));
}

#[test]
fn steady_state_invariants() {
    let l = build_liouvillian(&generic(), Scheme::Robust).unwrap();
    let ss = steady_state(&l).unwrap();
    assert!((operators::trace(&ss.rho).re - 1.0).abs() < 1e-10);
    assert!(operators::hermiticity_defect(&ss.rho) < 1e-14);
    let ev = operators::hermitian_eigh(&ss.rho).unwrap().0;
    assert!(ev.iter().all(|&v| v >= -1e-8));
    assert!(ss.residual < 1e-8 * ss.generator_scale);
}

#[test]
fn robust_beats_eit_at_matched_parameters() {
    let p = SystemParams {
        gamma: 15.0,
        omega_a: 2.3,
        omega_b: 1.0,
        eta_a: 0.05,
        eta_b: 0.2,
        delta: 2.0,
        n_max: 12,
        ..Default::default()
    };
    let robust = steady_state(&build_liouvillian(&p, Scheme::Robust).unwrap()).unwrap();
    // EIT alone: same A beam, same detuning, no ground-state coupling.
    let eit = steady_state(&build_liouvillian(&p, Scheme::Eit).unwrap()).unwrap();
    assert!(robust.mean_n * 10.0 <= eit.mean_n, "robust {} eit {}", robust.mean_n, eit.mean_n);
}

#[test]
fn steady_state_is_stationary_under_evolution() {
    let p = SystemParams { n_max: 6, ..generic() };
    let l = build_liouvillian(&p, Scheme::Robust).unwrap();
    let ss = steady_state(&l).unwrap();
    let grid: Vec<f64> = (0..6).map(|i| i as f64 * 2.0).collect();
    let traj = evolve(&l, &ss.rho, &grid).unwrap();
    for pt in &traj {
        assert!((pt.mean_n - ss.mean_n).abs() < 1e-6);
        assert!((pt.trace - 1.0).abs() < 1e-8);
    }
}

#[test]
fn evolution_rejects_unsorted_grid() {
    let p = SystemParams { n_max: 3, ..generic() };
    let l = build_liouvillian(&p, Scheme::Robust).unwrap();
    let rho = product_state(&l.space, Level::Minus, 1);
    assert!(evolve(&l, &rho, &[0.0, 1.0, 1.0]).is_err());
}

#[test]
fn mean_phonon_examples() {
    let space = SystemParams::default().with_n_max(4).space();
    let vac = product_state(&space, Level::Minus, 0);
    let one = product_state(&space, Level::Plus, 1);
    assert_eq!(mean_phonon(&vac, &space), 0.0);
    assert_eq!(mean_phonon(&one, &space), 1.0);
    let mix = (&vac + &one) * C64::new(0.5, 0.0);
    assert!((mean_phonon(&mix, &space) - 0.5).abs() < 1e-15);
    assert_eq!(electronic_populations(&mix, &space), [0.5, 0.5, 0.0]);
}

#[test]
fn relaxation_rate_agrees_with_integrated_dynamics() {
    // ∫(⟨n⟩ − n_ss) dt by quadrature of the evolved trajectory.
    let p = SystemParams { gamma: 2.0, omega_a: 0.8, n_max: 6, ..generic() };
    let l = build_liouvillian(&p, Scheme::Robust).unwrap();
    let r = relaxation_rate(&l, 1).unwrap();
    let t_end = 12.0 / r.rate;
    let grid: Vec<f64> = (0..=2400).map(|i| t_end * i as f64 / 2400.0).collect();
    let traj = evolve(&l, &product_state(&l.space, Level::Minus, 1), &grid).unwrap();
    let h = grid[1] - grid[0];
    let f: Vec<f64> = traj.iter().map(|pt| pt.mean_n - r.n_ss).collect();
    let integral: f64 = f.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
    let rate = (1.0 - r.n_ss) / integral;
    assert!((rate - r.rate).abs() < 1e-3 * r.rate, "{rate} vs {}", r.rate);
}

fn min_eig(rho: &Array2<C64>) -> f64 {
    let h = (rho + &operators::dagger(rho)) * C64::new(0.5, 0.0);
    operators::hermitian_eigh(&h).unwrap().0.iter().copied().fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn order0_evolution_stays_positive(seed in 0u64..10_000, gamma in 0.5f64..10.0, oa in 0.1f64..3.0) {
        let p = SystemParams { gamma, omega_a: oa, n_max: 3, ..generic() };
        let l = build_liouvillian(&p, Scheme::Robust).unwrap();
        let rho0 = random_density(l.space.dim, seed);
        let traj = evolve_with(&l.order0, &l.space, &rho0, &[0.0, 0.3, 1.0, 3.0]).unwrap();
        for pt in &traj {
            prop_assert!(min_eig(&pt.rho) >= -1e-8);
            prop_assert!((pt.trace - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn random_parameters_keep_trace(seed in 0u64..10_000, ea in 0.0f64..0.3, eb in 0.0f64..0.3,
                                    eu in 0.0f64..0.3, phi in 0.0f64..6.3) {
        let p = SystemParams { eta_a: ea, eta_b: eb, eta_up: eu, eta_down: 0.5 * eu, phi, n_max: 4, ..generic() };
        let l = build_liouvillian(&p, Scheme::Robust).unwrap();
        let rho = random_density(l.space.dim, seed);
        let out = unvec(l.total.matvec(&vec_of(&rho)), l.space.dim);
        prop_assert!(operators::trace(&out).norm() < 1e-10);
    }
}

#[test]
fn truncation_guard() {
    assert!(liouville::truncation_agrees(1.0, 1.005));
    assert!(!liouville::truncation_agrees(1.0, 1.02));
    assert!(liouville::truncation_agrees(0.0, 1e-13));
}

#[test]
fn steady_state_is_the_target_dark_state() {
    for eta in [0.02, 0.05, 0.1] {
        for (ob, oa, gamma) in [(1.0, 2.3, 15.0), (1.3, 1.0, 15.0), (0.5, 0.4, 5.0)] {
            let p = SystemParams { eta_a: eta, omega_b: ob, omega_a: oa, gamma, n_max: 10, ..Default::default() }
                .with_condition_eta_b()
                .unwrap();
            let ss = steady_state(&build_liouvillian(&p, Scheme::Robust).unwrap()).unwrap();
            assert!(ss.fidelity_target >= 1.0 - 5.0 * eta * eta, "{eta} {ob}: {}", ss.fidelity_target);
        }
    }
}
