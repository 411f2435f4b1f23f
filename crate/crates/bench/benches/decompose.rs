use std::hint::black_box;

use bipeel::{
    build_be_index, bup_tip, bup_wing, count_butterflies, tip_decomposition, wing_decomposition, PeelConfig,
    VertexSide,
};
use bipeel_bench::inputs;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn counting(c: &mut Criterion) {
    let mut group = c.benchmark_group("count");
    for input in inputs() {
        group.bench_function(BenchmarkId::new("butterflies", input.name), |b| {
            b.iter(|| count_butterflies(black_box(&input.graph)))
        });
        group.bench_function(BenchmarkId::new("be-index", input.name), |b| {
            b.iter(|| build_be_index(black_box(&input.graph)))
        });
    }
    group.finish();
}

fn wing(c: &mut Criterion) {
    let mut group = c.benchmark_group("wing");
    group.sample_size(10);
    for input in inputs() {
        let g = &input.graph;
        group.bench_function(BenchmarkId::new("bottom-up", input.name), |b| b.iter(|| bup_wing(g, true)));
        for (p, t) in [(1, 1), (16, 1), (16, 4), (64, 4)] {
            let cfg = PeelConfig::new(p).workers(t);
            group.bench_function(BenchmarkId::new(format!("two-phase/P{p}/T{t}"), input.name), |b| {
                b.iter(|| wing_decomposition(g, &cfg).expect("wing run"))
            });
        }
    }
    group.finish();
}

fn tip(c: &mut Criterion) {
    let mut group = c.benchmark_group("tip");
    group.sample_size(10);
    for input in inputs() {
        let g = &input.graph;
        group.bench_function(BenchmarkId::new("bottom-up", input.name), |b| b.iter(|| bup_tip(g, VertexSide::U)));
        for (p, t) in [(1, 1), (16, 1), (16, 4)] {
            let cfg = PeelConfig::new(p).workers(t);
            group.bench_function(BenchmarkId::new(format!("two-phase/P{p}/T{t}"), input.name), |b| {
                b.iter(|| tip_decomposition(g, VertexSide::U, &cfg).expect("tip run"))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, counting, wing, tip);
criterion_main!(benches);
