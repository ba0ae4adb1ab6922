//! Shared fixtures for the benchmark targets.

use evgraph_core::filters::SelectionStrategy;
use evgraph_core::graph::{build_sbm, Graph};
use evgraph_core::nn::{Activation, FamilySpec, LayerSpec, ModelSpec};
use evgraph_core::rng;
use evgraph_core::signal::GraphSignal;
use evgraph_core::testing;

/// The benchmark graph: a connected, normalized SBM(50, 5, 0.8, 0.2).
pub fn bench_graph() -> Graph {
    for attempt in 0..100 {
        let g = build_sbm(50, 5, 0.8, 0.2, rng::derive_seed(99, "bench-graph", &[attempt]))
            .expect("valid parameters");
        if g.is_connected() {
            return g.normalize_by_spectral_radius().expect("nonzero graph");
        }
    }
    unreachable!("SBM(50, 5, 0.8, 0.2) is connected with overwhelming probability")
}

pub fn bench_signal(g: &Graph, features: usize) -> GraphSignal {
    let mut rng = rng::stream(99, "bench-signal", &[features as u64]);
    testing::random_signal(g.num_nodes(), features, &mut rng)
}

/// One-layer model specs covering every family at the benchmark scale.
pub fn bench_specs() -> Vec<(&'static str, ModelSpec)> {
    let layer = |family: FamilySpec| ModelSpec {
        layers: vec![LayerSpec {
            in_features: 1,
            out_features: 1,
            family,
            activation: Activation::Relu,
        }],
        num_classes: 5,
    };
    vec![
        ("polynomial", layer(FamilySpec::Polynomial { order: 4 })),
        ("spectral", layer(FamilySpec::Spectral { num_knots: 5 })),
        (
            "node-variant",
            layer(FamilySpec::NodeVariant {
                order: 4,
                size: 5,
                strategy: SelectionStrategy::MaxDegree,
            }),
        ),
        (
            "edge-variant",
            layer(FamilySpec::EdgeVariant {
                order: 4,
                self_loops: true,
            }),
        ),
        (
            "hybrid-ev",
            layer(FamilySpec::HybridEv {
                order: 4,
                size: 5,
                strategy: SelectionStrategy::MaxDegree,
            }),
        ),
    ]
}
