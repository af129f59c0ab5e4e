use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qpermute_bench::dense_config;
use qpermute_core::{meta_operator_output, permutation_bins, run_device, schedule_for, SwitchNetwork};

fn device(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_device");
    for (n, m) in [(2, 2), (4, 2), (4, 4), (8, 2)] {
        let cfg = dense_config(n, m, 1);
        let net = SwitchNetwork::build(n).unwrap();
        let sched = schedule_for(&cfg, &net).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{m}")), &cfg, |b, cfg| {
            b.iter(|| run_device(black_box(cfg), &net, &sched).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let cfg = dense_config(4, 4, 2);
    c.bench_function("meta_operator_output/4x4", |b| {
        b.iter(|| {
            meta_operator_output(&cfg.operators, black_box(&cfg.control), &cfg.input_polarization, 4, 4).unwrap()
        })
    });
}

fn schedule(c: &mut Criterion) {
    let mut group = c.benchmark_group("schedule_for");
    for (n, m) in [(4, 4), (8, 2), (16, 2)] {
        let cfg = dense_config(n, m, 3);
        let net = SwitchNetwork::build(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{m}")), &cfg, |b, cfg| {
            b.iter(|| schedule_for(black_box(cfg), &net).unwrap())
        });
    }
    group.finish();
}

fn permutations(c: &mut Criterion) {
    c.bench_function("permutation_bins/6", |b| b.iter(|| permutation_bins(black_box(6))));
}

criterion_group!(benches, device, oracle, schedule, permutations);
criterion_main!(benches);
