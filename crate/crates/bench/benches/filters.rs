//! Forward and backward timings for every filter family on the
//! benchmark-scale graph.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use evgraph_bench::{bench_graph, bench_signal, bench_specs};
use evgraph_core::nn::{GraphContext, Model};
use evgraph_core::signal::GraphSignal;

fn filter_forward(c: &mut Criterion) {
    let graph = bench_graph();
    let x = bench_signal(&graph, 1);
    let mut group = c.benchmark_group("layer_forward");
    for (name, spec) in bench_specs() {
        let ctx = GraphContext::for_model_spec(graph.clone(), &spec).unwrap();
        let model = Model::init(&spec, &ctx, 7).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| black_box(model.forward(&ctx, black_box(&x)).unwrap()))
        });
    }
    group.finish();
}

fn filter_backward(c: &mut Criterion) {
    let graph = bench_graph();
    let x = bench_signal(&graph, 1);
    let batch: Vec<(&GraphSignal, usize)> = vec![(&x, 1)];
    let mut group = c.benchmark_group("batch_loss_grads");
    for (name, spec) in bench_specs() {
        let ctx = GraphContext::for_model_spec(graph.clone(), &spec).unwrap();
        let model = Model::init(&spec, &ctx, 7).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| black_box(model.batch_loss_grads(&ctx, black_box(&batch)).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, filter_forward, filter_backward);
criterion_main!(benches);
