use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use chaotic_walks::poisson::{solve_poisson_canonical, solve_poisson_general};
use chaotic_walks::skew::discretize_displacement;
use chaotic_walks::subshift::SubshiftSpec;
use chaotic_walks_bench::affine_displacement;

fn bench_poisson(c: &mut Criterion) {
    let xi = affine_displacement();
    let mut group = c.benchmark_group("poisson");
    for level in [6u32, 8, 10, 12] {
        let disc = discretize_displacement(&xi, 2, level).unwrap();
        group.bench_with_input(
            BenchmarkId::new("canonical_geometric_sum", level),
            &level,
            |b, &lvl| {
                b.iter(|| solve_poisson_canonical::<f64>(black_box(&disc.values), 2, lvl).unwrap())
            },
        );
    }
    // The dense general path is only feasible for moderate K.
    for level in [6u32, 8] {
        let disc = discretize_displacement(&xi, 2, level).unwrap();
        let spec = SubshiftSpec::canonical(2, level).unwrap();
        group.bench_with_input(
            BenchmarkId::new("general_dense_solve", level),
            &level,
            |b, _| b.iter(|| solve_poisson_general::<f64>(&spec, black_box(&disc.values)).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_poisson);
criterion_main!(benches);
