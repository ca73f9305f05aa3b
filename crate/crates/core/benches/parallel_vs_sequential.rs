use std::hint::black_box;

use agd_core::diagnostics::{figure4_lineup, race, TestFnProblem};
use agd_core::par::Exec;
use agd_core::testfns::TestFn;
use agd_core::theory::{lemma3_random_runs, theory_mode, variance_ratio_mc};
use agd_core::HyperParams;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn variance_mc(c: &mut Criterion) {
    let mut group = c.benchmark_group("variance_mc");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| variance_ratio_mc(0.9, 10, black_box(200_000), 0, exec).unwrap())
        });
    }
    group.finish();
}

fn lemma3_runs(c: &mut Criterion) {
    let hp = theory_mode(&HyperParams::default().with_alpha(1.0));
    let mut group = c.benchmark_group("lemma3_runs");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| lemma3_random_runs(black_box(200), 4, 5.0, 500, &hp, 0, exec).unwrap())
        });
    }
    group.finish();
}

fn races(c: &mut Criterion) {
    let lineup = figure4_lineup();
    let problem = TestFnProblem::new(TestFn::Rosenbrock);
    let mut group = c.benchmark_group("race_rosenbrock");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| race(&problem, &lineup, 1e-2, black_box(20_000), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, variance_mc, lemma3_runs, races);
criterion_main!(benches);
