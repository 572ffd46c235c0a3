//! Parallel vs sequential sweep throughput on the shift grid of the
//! pseudospectral-gap search, the hottest data-parallel loop.

use channel_stab_core::linop::{assemble, min_singular_value, Toggles};
use channel_stab_core::spectral::build_grid;
use channel_stab_core::util::{par_map, seq_map};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::sync::Arc;

fn shift_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| -0.5 + 2.0 * i as f64 / (points - 1) as f64)
        .collect()
}

fn bench_sigma_sweep(c: &mut Criterion) {
    let grid = Arc::new(build_grid(64).unwrap());
    let op = assemble(grid, 1e-3, 1, Toggles::default()).unwrap();
    let mut group = c.benchmark_group("sigma_min_shift_sweep");
    group.sample_size(10);
    for points in [8usize, 32] {
        group.bench_with_input(BenchmarkId::new("parallel", points), &points, |b, &p| {
            b.iter(|| par_map(shift_grid(p), |l| min_singular_value(&op, l)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", points), &points, |b, &p| {
            b.iter(|| seq_map(shift_grid(p), |l| min_singular_value(&op, l)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sigma_sweep);
criterion_main!(benches);
