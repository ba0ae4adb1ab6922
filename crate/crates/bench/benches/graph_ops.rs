//! Timings for the sparse shift, diffusion, and the eigensolver.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use evgraph_bench::{bench_graph, bench_signal};
use evgraph_core::eigen::eigendecompose;

fn shift_and_diffusion(c: &mut Criterion) {
    let graph = bench_graph();
    let x = bench_signal(&graph, 1);
    c.bench_function("shift_apply", |b| {
        b.iter(|| black_box(graph.shift_apply(black_box(&x)).unwrap()))
    });
    c.bench_function("diffuse_delta_t25", |b| {
        b.iter(|| black_box(graph.diffuse_delta(black_box(7), 25).unwrap()))
    });
}

fn eigensolver(c: &mut Criterion) {
    let graph = bench_graph();
    c.bench_function("eigendecompose_n50", |b| {
        b.iter(|| black_box(eigendecompose(black_box(&graph)).unwrap()))
    });
}

criterion_group!(benches, shift_and_diffusion, eigensolver);
criterion_main!(benches);
