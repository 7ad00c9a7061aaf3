//! Throughput benchmarks for the hot paths. Bench IDs carry the execution
//! mode, so running `cargo bench` (rayon) and
//! `cargo bench --no-default-features` (sequential fallback) produces
//! directly comparable entries in the criterion report.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};

use cvnet_core::gaussian::{
    cluster_covariance, nullifier_variances, nullifier_variances_closed_form, OrthogonalMatrix,
};
use cvnet_core::graph::{gen_barabasi_albert, RngSeed};
use cvnet_core::optimizer::{optimize_orthogonal, QualityObjective};
use cvnet_core::par::execution_mode;
use cvnet_core::routing::{fixtures, routing_fitness, solve_routing, SolveOptions};
use cvnet_core::runner::{run_quality_sweep, Model, Objective, SpectrumSource, SweepSpec};
use cvnet_core::spectrum::SqueezingSpectrum;

fn bench_nullifiers(c: &mut Criterion) {
    let mode = execution_mode();
    let n = 64;
    let g = gen_barabasi_albert(n, 4, RngSeed(1)).unwrap();
    let mut rng = RngSeed(2).rng();
    let o = OrthogonalMatrix::random_haar(n, &mut rng);
    let s = SqueezingSpectrum::uniform_random(n, -14.0, -3.0, &mut rng).unwrap();

    let mut group = c.benchmark_group("nullifiers");
    group.bench_function(format!("closed_form_n64/{mode}"), |b| {
        b.iter(|| nullifier_variances_closed_form(black_box(&g), &o, &s).unwrap())
    });
    group.bench_function(format!("covariance_path_n64/{mode}"), |b| {
        b.iter(|| {
            let sigma = cluster_covariance(black_box(&g), &o, &s).unwrap();
            nullifier_variances(&sigma, &g).unwrap()
        })
    });
    group.finish();
}

fn bench_optimizer(c: &mut Criterion) {
    let mode = execution_mode();
    let n = 48;
    let g = gen_barabasi_albert(n, 5, RngSeed(3)).unwrap();
    let s = SqueezingSpectrum::standin_48();
    let obj = QualityObjective::uniform(n);

    c.bench_function(&format!("optimize_orthogonal_n48/{mode}"), |b| {
        b.iter(|| optimize_orthogonal(black_box(&g), &s, &obj).unwrap())
    });
}

fn bench_quality_sweep(c: &mut Criterion) {
    let mode = execution_mode();
    let spec = SweepSpec {
        model: Model::Ba,
        nodes: 48,
        params: vec![5.0],
        trials: 16,
        spectrum: SpectrumSource::Uniform { lo_db: -14.0, hi_db: -3.0 },
        objective: Objective::Uniform,
        seed: RngSeed(4),
    };
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    group.bench_function(format!("ba48_sweep_16_trials/{mode}"), |b| {
        b.iter(|| run_quality_sweep(black_box(&spec)).unwrap())
    });
    group.finish();
}

fn bench_routing(c: &mut Criterion) {
    let mode = execution_mode();
    let prob = fixtures::grid6_problem(3.0).unwrap();
    let theta: Vec<f64> = (0..prob.param_count()).map(|i| (0.1 * i as f64).sin()).collect();

    let mut group = c.benchmark_group("routing");
    group.bench_function(format!("fitness_eval_grid6/{mode}"), |b| {
        b.iter(|| routing_fitness(black_box(&theta), &prob))
    });

    group.sample_size(10);
    group.measurement_time(Duration::from_secs(12));
    group.bench_function(format!("short_search_grid6/{mode}"), |b| {
        b.iter(|| {
            let mut opts = SolveOptions::default_for(&prob, RngSeed(5)).unwrap();
            opts.restarts = 4;
            opts.es.max_evals = 4_000;
            opts.es.target_fitness = 0.0; // burn the full budget
            solve_routing(black_box(&prob), &opts).unwrap()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_nullifiers,
    bench_optimizer,
    bench_quality_sweep,
    bench_routing
);
criterion_main!(benches);
