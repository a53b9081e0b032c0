//! Parallel vs. sequential throughput for the data-parallel inner loops:
//! Monte Carlo moment estimation, Monte Carlo rate estimation, and one GA
//! run. Both paths produce bit-identical results; this suite measures what
//! the rayon backend buys at each workload size.
//!
//! Run with `cargo bench -p ris-kit`.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ris_kit::channel::PhaseShifts;
use ris_kit::exec::Exec;
use ris_kit::ga::{self, GaConfig};
use ris_kit::monte_carlo::{ergodic_rates_mc_with, moment_report_with};
use ris_kit::scenario::{AngleSet, Dimensions, FadingParams, LinkBudget, Scenario};

fn bench_scenario(m: usize, n: usize, users: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    Scenario::from_parts(
        Dimensions::new(m, n, users).unwrap(),
        FadingParams {
            delta: 1.0,
            epsilon: vec![2.0; users],
            alpha: vec![0.9; users],
            beta: 1.1,
            gamma: vec![0.4; users],
        },
        AngleSet::draw(users, &mut rng),
        LinkBudget { p: vec![1.0; users], sigma2: 0.3, spacing_ratio: 0.5 },
        None,
        1,
    )
    .unwrap()
}

fn bench_moment_report(c: &mut Criterion) {
    let sc = bench_scenario(16, 16, 2);
    let phases = PhaseShifts::zeros(16);
    let mut group = c.benchmark_group("moment_report_2e4");
    for (label, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &exec, |b, &exec| {
            b.iter(|| {
                let report = moment_report_with(&sc, &phases, 20_000, 7, exec).unwrap();
                black_box(report.max_abs_z());
            })
        });
    }
    group.finish();
}

fn bench_ergodic_rate(c: &mut Criterion) {
    let sc = bench_scenario(49, 49, 4);
    let phases = PhaseShifts::uniform_from_seed(49, 3);
    let mut group = c.benchmark_group("ergodic_rate_mc_2e3");
    group.sample_size(10);
    for (label, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &exec, |b, &exec| {
            b.iter(|| {
                let est = ergodic_rates_mc_with(&sc, &phases, 2_000, 11, exec).unwrap();
                black_box(est[0].mean);
            })
        });
    }
    group.finish();
}

fn bench_ga_run(c: &mut Criterion) {
    let sc = bench_scenario(49, 49, 4);
    let config = GaConfig { max_generations: Some(40), ..GaConfig::default() };
    let mut group = c.benchmark_group("ga_40_generations");
    group.sample_size(10);
    for (label, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &exec, |b, &exec| {
            b.iter(|| {
                let run = ga::run_with(&sc, &config, 13, exec, 0).unwrap();
                black_box(run.best.fitness);
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_moment_report, bench_ergodic_rate, bench_ga_run);
criterion_main!(benches);
