//! Engine benchmarks on matched workloads: the single-photon pass across
//! sector widths, then the three stream drivers.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use srs_bench::half_filled_state;
use srs_core::{
    run_exact_tree, run_kraus, run_mc, sweep, MediumState, ModelParams, PhotonSpin,
};

fn bench_single_pass(c: &mut Criterion) {
    let mut group = c.benchmark_group("single_pass");
    for m in [8usize, 12, 16, 20] {
        let params = ModelParams::new(m, 0.3).unwrap();
        let state = half_filled_state(m);
        group.throughput(Throughput::Elements(state.support_len() as u64));
        group.bench_with_input(BenchmarkId::new("half_filled", m), &m, |b, _| {
            b.iter(|| sweep(black_box(&state), PhotonSpin::Laser, &params).unwrap())
        });
    }
    group.finish();
}

fn bench_stream_drivers(c: &mut Criterion) {
    let mut group = c.benchmark_group("stream_drivers");
    group.sample_size(10);

    let params = ModelParams::new(10, 0.3).unwrap();
    let ground = MediumState::new_all_ground(10).unwrap();
    let spins = vec![PhotonSpin::Laser; 12];
    group.bench_function("exact_tree_12_photons", |b| {
        b.iter(|| run_exact_tree(&params, &ground, black_box(&spins), 0.0).unwrap())
    });

    let spins = vec![PhotonSpin::Laser; 20];
    group.bench_function("kraus_20_photons", |b| {
        b.iter(|| run_kraus(&params, &ground, black_box(&spins)).unwrap())
    });

    let params_mc = ModelParams::new(8, 0.3).unwrap();
    let ground_mc = MediumState::new_all_ground(8).unwrap();
    group.throughput(Throughput::Elements(256));
    group.bench_function("mc_256_trajectories_20_photons", |b| {
        b.iter(|| run_mc(&params_mc, &ground_mc, black_box(&spins), 256, 7).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_single_pass, bench_stream_drivers);
criterion_main!(benches);
