//! Parallel vs sequential throughput of the three hot paths: trajectory
//! ensembles, one-step moment sampling, and density-grid transport. The
//! parallel numbers use the rayon pool (the default `parallel` feature);
//! `force_sequential(true)` measures the same code on one thread, which
//! is also what a `--no-default-features` build always does.
//!
//! Run with `cargo bench -p ginflow`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use ginflow::burgers::{Burgers, DensityGrid};
use ginflow::exec::force_sequential;
use ginflow::linalg::ComplexMatrix;
use ginflow::process::{run_ensemble, ProcessConfig};
use ginflow::sde::{one_step_moment_test, Observable};

fn hand_matrix() -> ComplexMatrix {
    let c = Complex64::new;
    ComplexMatrix::from_rows(2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
}

fn modes() -> [(&'static str, bool); 2] {
    [("parallel", false), ("sequential", true)]
}

fn bench_ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble_n16");
    group.sample_size(10);
    let config = ProcessConfig {
        n: 16,
        t_end: 0.5,
        dt: 0.05,
        m0: ComplexMatrix::zeros(16),
        seed: 41,
        n_traj: 24,
        frame_stride: 1,
        store_matrices: false,
        allow_degenerate_start: true,
    };
    for (name, seq) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &seq, |b, &seq| {
            force_sequential(seq);
            b.iter(|| run_ensemble(&config).unwrap());
            force_sequential(false);
        });
    }
    group.finish();
}

fn bench_one_step_sampler(c: &mut Criterion) {
    let mut group = c.benchmark_group("overlap_drift_20k");
    group.sample_size(10);
    let m = hand_matrix();
    for (name, seq) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &seq, |b, &seq| {
            force_sequential(seq);
            b.iter(|| {
                one_step_moment_test(
                    &m,
                    1e-4,
                    20_000,
                    Observable::OverlapDrift { j: 0, k: 0 },
                    17,
                )
                .unwrap()
            });
            force_sequential(false);
        });
    }
    group.finish();
}

fn bench_density_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("density_grid_61x61");
    group.sample_size(10);
    let solver = Burgers::new(ComplexMatrix::zeros(2));
    let grid = DensityGrid::square(1.5, 61);
    for (name, seq) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &seq, |b, &seq| {
            force_sequential(seq);
            b.iter(|| solver.density_fields(1.0, &grid).unwrap());
            force_sequential(false);
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_ensemble,
    bench_one_step_sampler,
    bench_density_grid
);
criterion_main!(benches);
