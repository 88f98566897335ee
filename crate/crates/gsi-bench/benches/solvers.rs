//! Criterion benchmarks for the numerical kernels: full SVD, one
//! soft-impute step, a full solver run at one shrinkage level, and an
//! alternating-least-squares sweep.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use gsi_core::{
    als_fit, generate_synthetic, random_init, soft_impute, soft_impute_step, svd, AlsConfig,
    RatingMatrix, SoftImputeConfig, SyntheticConfig,
};

fn instance(users: usize, items: usize) -> RatingMatrix {
    generate_synthetic(&SyntheticConfig {
        users,
        items,
        observed_fraction: 0.3,
        seed: 99,
        ..Default::default()
    })
    .unwrap()
}

fn bench_svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("svd");
    group.sample_size(20);
    for (m, n) in [(60, 30), (150, 60)] {
        let x = instance(m, n);
        let dense = x.project_observed();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{m}x{n}")),
            &dense,
            |b, d| b.iter(|| svd(black_box(d)).unwrap()),
        );
    }
    group.finish();
}

fn bench_soft_impute(c: &mut Criterion) {
    let x = instance(120, 50);
    let sigma_max = svd(&x.project_observed()).unwrap().sigma[0];
    let lambda = sigma_max / 10.0;
    let z0 = random_init(x.m(), x.n(), 1);

    let mut group = c.benchmark_group("soft_impute");
    group.sample_size(20);
    group.bench_function("step_120x50", |b| {
        b.iter(|| soft_impute_step(black_box(&x), black_box(&z0), lambda).unwrap())
    });
    group.sample_size(10);
    group.bench_function("solve_120x50", |b| {
        let config = SoftImputeConfig {
            epsilon: 1e-4,
            ..Default::default()
        };
        b.iter(|| soft_impute(black_box(&x), lambda, black_box(&z0), &config).unwrap())
    });
    group.finish();
}

fn bench_als(c: &mut Criterion) {
    let x = instance(120, 50);
    let mut group = c.benchmark_group("als");
    group.sample_size(20);
    group.bench_function("sweep_120x50_r10", |b| {
        let config = AlsConfig {
            rank: 10,
            max_sweeps: 1,
            ..Default::default()
        };
        b.iter(|| als_fit(black_box(&x), &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_svd, bench_soft_impute, bench_als);
criterion_main!(benches);
