use coordsim::coding::{encode_direct, CodebookSpec};
use coordsim::probkit;
use coordsim::region::{self, SolverOptions};
use coordsim::typicality;
use coordsim_bench::{binary_law, direct_config, sequence, ternary_query};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn joint_type(c: &mut Criterion) {
    let mut group = c.benchmark_group("joint_type");
    for n in [64, 1024, 16384] {
        let x = sequence(1, n, 3);
        let y = sequence(2, n, 4);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| probkit::joint_type(black_box(&x), black_box(&y), 3, 4).unwrap())
        });
    }
    group.finish();
}

fn strong_typicality(c: &mut Criterion) {
    let law = binary_law();
    let x = sequence(3, 4096, 2);
    let y = sequence(4, 4096, 2);
    c.bench_function("is_strongly_typical/4096", |b| {
        b.iter(|| typicality::is_strongly_typical(black_box(&x), black_box(&y), law.p_x_y(), 0.3).unwrap())
    });
}

fn encoder_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("encode_direct");
    for n in [16, 32] {
        let cfg = direct_config(0.4, 0.6);
        let book = CodebookSpec::direct(n, 0.4, 0.0, cfg.law.p_y().clone(), 9, 0).unwrap();
        let xhat = sequence(5, n, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| encode_direct(black_box(&xhat), &cfg, &book))
        });
    }
    group.finish();
}

fn region_solve(c: &mut Criterion) {
    let opts = SolverOptions::default();
    let query = ternary_query(0.05);
    c.bench_function("min_per_agent_rate/3x3x2", |b| {
        b.iter(|| region::min_per_agent_rate(black_box(&query), &opts).unwrap())
    });
}

criterion_group!(benches, joint_type, strong_typicality, encoder_scan, region_solve);
criterion_main!(benches);
