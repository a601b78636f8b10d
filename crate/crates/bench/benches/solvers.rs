use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use darkcool::chain::{self, ChainConfig, TrajectoryOptions};
use darkcool::fano::{self, ContinuumModel};
use darkcool::liouville::{relaxation_rate, steady_state};
use darkcool::raman::{self, RamanParams, ValidationOptions};
use darkcool::rates;
use darkcool::{build_liouvillian, Scheme};
use darkcool_bench::single_ion;

fn liouvillian(c: &mut Criterion) {
    let mut g = c.benchmark_group("liouvillian");
    for n_max in [6, 10, 15] {
        let p = single_ion(n_max);
        g.bench_with_input(BenchmarkId::new("build", n_max), &p, |b, p| {
            b.iter(|| build_liouvillian(black_box(p), Scheme::Robust).unwrap())
        });
        let l = build_liouvillian(&p, Scheme::Robust).unwrap();
        g.bench_with_input(BenchmarkId::new("steady_state", n_max), &l, |b, l| b.iter(|| steady_state(l).unwrap()));
        g.bench_with_input(BenchmarkId::new("relaxation_rate", n_max), &l, |b, l| {
            b.iter(|| relaxation_rate(l, 1).unwrap())
        });
    }
    g.finish();
}

fn rate_equation(c: &mut Criterion) {
    let p = single_ion(6);
    c.bench_function("rates/closed_form", |b| {
        b.iter(|| rates::closed_form_rates(black_box(&p), Scheme::Robust).unwrap())
    });
    c.bench_function("rates/projection", |b| {
        b.iter(|| rates::project_rate_equation(black_box(&p), Scheme::Robust).unwrap())
    });
}

fn continuum(c: &mut Criterion) {
    let mut g = c.benchmark_group("fano");
    g.sample_size(10);
    for modes in [250, 500, 1000] {
        let model = ContinuumModel::flat(0.5, 1.0, 1.0, modes, -20.0, 20.0);
        g.bench_with_input(BenchmarkId::new("diagonalize", modes), &model, |b, m| {
            b.iter(|| fano::diagonalize_continuum(m).unwrap())
        });
    }
    g.finish();
}

fn trajectories(c: &mut Criterion) {
    let model = chain::build_jump_model(&ChainConfig::single_ion(single_ion(6)).unwrap()).unwrap();
    let psi0 = model.initial_state(&[1]).unwrap();
    let opts = TrajectoryOptions::uniform(100.0, 11);
    let mut stream = 0;
    let mut g = c.benchmark_group("mcwf");
    g.sample_size(20);
    g.bench_function("single_ion_trajectory", |b| {
        b.iter(|| {
            stream += 1;
            chain::run_trajectory(&model, &psi0, 1, stream, &opts).unwrap()
        })
    });
    g.finish();
}

fn elimination(c: &mut Criterion) {
    let r = RamanParams::new(2.0, 0.001, 50.0);
    let opts = ValidationOptions { samples: 200, ..Default::default() };
    let mut g = c.benchmark_group("raman");
    g.sample_size(10);
    g.bench_function("validate_elimination", |b| b.iter(|| raman::validate_elimination(&r, &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, liouvillian, rate_equation, continuum, trajectories, elimination);
criterion_main!(benches);
