use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;

use chaotic_walks::poisson::solve_poisson_canonical;
use chaotic_walks::skew::{
    iterate_trajectory, Chart, PerturbationKind, PerturbationSpec, SkewSystem, DEFAULT_WINDOW,
};
use chaotic_walks::stopping::{estimate_escape_compact, MarkovWalk};
use chaotic_walks::subshift::sample_path;
use chaotic_walks_bench::affine_displacement;

fn bench_trajectory(c: &mut Criterion) {
    let n = 100_000usize;
    let mut group = c.benchmark_group("trajectory");
    group.throughput(Throughput::Elements(n as u64));
    let cases = [
        ("group_extension", PerturbationSpec::zero()),
        (
            "cubic_perturbation",
            PerturbationSpec::new(PerturbationKind::Cubic { rho: 0.2 }, 0.2).unwrap(),
        ),
    ];
    for (name, r) in cases {
        let sys = SkewSystem::new(3, 1, affine_displacement(), r, Chart::Interval).unwrap();
        let spec = sys.subshift();
        let path = sample_path(&spec, 7, n + DEFAULT_WINDOW).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| iterate_trajectory(&sys, black_box(&path), 0.5, n, DEFAULT_WINDOW).unwrap())
        });
    }
    group.finish();
}

fn bench_escape(c: &mut Criterion) {
    let pd = solve_poisson_canonical::<f64>(&[1.0, -1.0], 2, 1).unwrap();
    let walk = MarkovWalk::from_poisson(&pd, 0.0, 0.0);
    let mut group = c.benchmark_group("escape");
    group.sample_size(10);
    group.bench_function("compact_10k_trials", |b| {
        b.iter(|| estimate_escape_compact(&walk, -5.0, 10.0, 10_000, 100_000, 11).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_trajectory, bench_escape);
criterion_main!(benches);
