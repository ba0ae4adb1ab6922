//! Source localization on stochastic block models.
//!
//! Diffused deltas x = S^t delta_i are classified by the community of the
//! source node. The orchestrator runs every architecture on shared data per
//! (graph realization, data realization) pair, in parallel across runs, and
//! merges results in run-index order so the output is identical to a
//! sequential execution.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filters::SelectionStrategy;
use crate::graph::{build_sbm, Graph};
use crate::nn::{
    evaluate, train, Activation, AdamConfig, Dataset, FamilySpec, GraphContext, LayerSpec, Model,
    ModelSpec, Split,
};
use crate::rng;
use crate::signal::GraphSignal;

/// One of the benchmark architectures, with a stable identifier for CSV
/// output and a display name for the aligned table.
#[derive(Debug, Clone)]
pub struct ArchitectureSpec {
    pub name: String,
    pub display_name: String,
    pub model: ModelSpec,
}

/// The seven architectures compared by the benchmark, in table order.
/// All use one graph-filter layer with ReLU and a dense softmax readout.
pub fn default_architectures(
    order: usize,
    num_knots: usize,
    num_privileged: usize,
    out_features: usize,
    num_classes: usize,
) -> Vec<ArchitectureSpec> {
    let layer = |family: FamilySpec| ModelSpec {
        layers: vec![LayerSpec {
            in_features: 1,
            out_features,
            family,
            activation: Activation::Relu,
        }],
        num_classes,
    };
    vec![
        ArchitectureSpec {
            name: "spectral".into(),
            display_name: "Spectral".into(),
            model: layer(FamilySpec::Spectral { num_knots }),
        },
        ArchitectureSpec {
            name: "polynomial".into(),
            display_name: "Polynomial".into(),
            model: layer(FamilySpec::Polynomial { order }),
        },
        ArchitectureSpec {
            name: "nv-degree".into(),
            display_name: "Node Variant (NV) Degree".into(),
            model: layer(FamilySpec::NodeVariant {
                order,
                size: num_privileged,
                strategy: SelectionStrategy::MaxDegree,
            }),
        },
        ArchitectureSpec {
            name: "nv-proxies".into(),
            display_name: "Node Variant (NV) S. Proxies".into(),
            model: layer(FamilySpec::NodeVariant {
                order,
                size: num_privileged,
                strategy: SelectionStrategy::SpectralProxies,
            }),
        },
        ArchitectureSpec {
            name: "ev".into(),
            display_name: "Edge Variant (EV)".into(),
            model: layer(FamilySpec::EdgeVariant {
                order,
                self_loops: true,
            }),
        },
        ArchitectureSpec {
            name: "hev-degree".into(),
            display_name: "Hybrid EV (HEV) Degree".into(),
            model: layer(FamilySpec::HybridEv {
                order,
                size: num_privileged,
                strategy: SelectionStrategy::MaxDegree,
            }),
        },
        ArchitectureSpec {
            name: "hev-proxies".into(),
            display_name: "Hybrid EV (HEV) S. Proxies".into(),
            model: layer(FamilySpec::HybridEv {
                order,
                size: num_privileged,
                strategy: SelectionStrategy::SpectralProxies,
            }),
        },
    ]
}

#[derive(Debug, Clone)]
pub struct SourceLocConfig {
    pub num_nodes: usize,
    pub num_communities: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub num_train: usize,
    pub num_test: usize,
    /// Diffusion times are drawn uniformly from 0..=diffusion_time_max.
    pub diffusion_time_max: usize,
    pub architectures: Vec<ArchitectureSpec>,
    pub adam: AdamConfig,
    pub num_graph_realizations: usize,
    pub num_data_realizations: usize,
    pub master_seed: u64,
    /// Worker threads for the run loop; 0 uses the default pool size.
    pub workers: usize,
}

impl SourceLocConfig {
    /// Desk-scale defaults: 2000 training samples, 5 x 2 runs, paper
    /// hyperparameters (K = 4, |B| = 5, b = 5, ADAM 0.001/0.9/0.999,
    /// 20 epochs, batches of 100).
    pub fn desk_scale(master_seed: u64) -> Self {
        Self {
            num_nodes: 50,
            num_communities: 5,
            p_intra: 0.8,
            p_inter: 0.2,
            num_train: 2000,
            num_test: 200,
            diffusion_time_max: 50,
            architectures: default_architectures(4, 5, 5, 1, 5),
            adam: AdamConfig::default(),
            num_graph_realizations: 5,
            num_data_realizations: 2,
            master_seed,
            workers: 0,
        }
    }

    /// Full-scale configuration: 10000 training samples, 10 x 10 runs.
    pub fn paper_scale(master_seed: u64) -> Self {
        Self {
            num_train: 10000,
            num_graph_realizations: 10,
            num_data_realizations: 10,
            ..Self::desk_scale(master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_train == 0 || self.num_test == 0 {
            return Err(Error::invalid("sample counts must be positive"));
        }
        if self.num_graph_realizations == 0 || self.num_data_realizations == 0 {
            return Err(Error::invalid("realization counts must be positive"));
        }
        if self.diffusion_time_max > self.num_nodes {
            return Err(Error::invalid(format!(
                "diffusion time range [0, {}] exceeds the node count {}",
                self.diffusion_time_max, self.num_nodes
            )));
        }
        if self.architectures.is_empty() {
            return Err(Error::invalid("no architectures configured"));
        }
        self.adam.validate()
    }

    pub fn num_runs(&self) -> usize {
        self.num_graph_realizations * self.num_data_realizations
    }
}

/// Community label of a 1-based node index under contiguous blocks:
/// ceil(i C / N).
pub fn label_of_node(node: usize, num_nodes: usize, num_communities: usize) -> Result<usize> {
    if node == 0 || node > num_nodes {
        return Err(Error::invalid(format!(
            "node {node} out of range 1..={num_nodes}"
        )));
    }
    Ok((node * num_communities).div_ceil(num_nodes))
}

/// Draws one diffused sample: a community c, a source node uniform inside
/// that community, a diffusion time t in 0..=t_max, and x = S^t delta.
pub fn gen_source_sample(
    g: &Graph,
    num_communities: usize,
    t_max: usize,
    rng: &mut impl Rng,
) -> Result<(GraphSignal, usize)> {
    if !g.has_unit_spectral_radius() {
        return Err(Error::invalid(
            "source sampling needs a shift normalized to unit spectral radius",
        ));
    }
    let n = g.num_nodes();
    if n % num_communities != 0 {
        return Err(Error::invalid(
            "node count must divide evenly into communities",
        ));
    }
    let block = n / num_communities;
    let community = rng.random_range(1..=num_communities);
    let node = (community - 1) * block + rng.random_range(0..block);
    let t = rng.random_range(0..=t_max);
    Ok((g.diffuse_delta(node, t)?, community))
}

/// Samples SBM graphs until one is connected (at most 100 attempts),
/// then normalizes it. Returns the graph and the seed that produced it.
pub fn sample_connected_sbm(cfg: &SourceLocConfig, graph_index: usize) -> Result<(Graph, u64)> {
    for attempt in 0..100u64 {
        let seed = rng::derive_seed(
            cfg.master_seed,
            "sbm-graph",
            &[graph_index as u64, attempt],
        );
        let g = build_sbm(
            cfg.num_nodes,
            cfg.num_communities,
            cfg.p_intra,
            cfg.p_inter,
            seed,
        )?;
        if g.is_connected() {
            return Ok((g.normalize_by_spectral_radius()?, seed));
        }
    }
    Err(Error::ExperimentFailure(format!(
        "graph realization {graph_index}: no connected sample within 100 attempts"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    pub graph_seed: u64,
    pub data_seed: u64,
    pub architecture: String,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsRow {
    pub architecture: String,
    pub display_name: String,
    pub mean_accuracy: f64,
    pub std_deviation: f64,
    pub run_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<ResultsRow>,
}

/// Runs the full benchmark: every architecture on every
/// (graph realization, data realization) pair.
pub fn run_source_localization(
    cfg: &SourceLocConfig,
) -> Result<(ResultsTable, Vec<RunRecord>)> {
    cfg.validate()?;
    let run_ids: Vec<usize> = (0..cfg.num_runs()).collect();
    let run_results: Result<Vec<Vec<RunRecord>>> = if cfg.workers == 1 {
        run_ids.iter().map(|&r| execute_run(cfg, r)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::ExperimentFailure(format!("worker pool: {e}")))?;
        pool.install(|| run_ids.par_iter().map(|&r| execute_run(cfg, r)).collect())
    };
    let records: Vec<RunRecord> = run_results?.into_iter().flatten().collect();
    Ok((aggregate(cfg, &records), records))
}

/// Trains and tests every architecture for one run; architectures share the
/// same training and test data, and their seeds derive from
/// (master seed, architecture index, run index).
fn execute_run(cfg: &SourceLocConfig, run_id: usize) -> Result<Vec<RunRecord>> {
    let graph_index = run_id / cfg.num_data_realizations;
    let data_index = run_id % cfg.num_data_realizations;
    let (graph, graph_seed) = sample_connected_sbm(cfg, graph_index)?;

    let data_seed = rng::derive_seed(
        cfg.master_seed,
        "data-realization",
        &[graph_index as u64, data_index as u64],
    );
    let mut data = Dataset::new(cfg.num_communities)?;
    let mut train_rng = rng::stream(data_seed, "train-samples", &[]);
    for _ in 0..cfg.num_train {
        let (x, label) = gen_source_sample(
            &graph,
            cfg.num_communities,
            cfg.diffusion_time_max,
            &mut train_rng,
        )?;
        data.push(x, label, Split::Train)?;
    }
    let mut test_rng = rng::stream(data_seed, "test-samples", &[]);
    for _ in 0..cfg.num_test {
        let (x, label) = gen_source_sample(
            &graph,
            cfg.num_communities,
            cfg.diffusion_time_max,
            &mut test_rng,
        )?;
        data.push(x, label, Split::Test)?;
    }

    let mut records = Vec::with_capacity(cfg.architectures.len());
    for (arch_index, arch) in cfg.architectures.iter().enumerate() {
        let ctx = GraphContext::for_model_spec(graph.clone(), &arch.model)?;
        let model_seed = rng::derive_seed(
            cfg.master_seed,
            "model-init",
            &[arch_index as u64, run_id as u64],
        );
        let mut model = Model::init(&arch.model, &ctx, model_seed)?;
        let adam = AdamConfig {
            seed: rng::derive_seed(
                cfg.master_seed,
                "train-shuffle",
                &[arch_index as u64, run_id as u64],
            ),
            ..cfg.adam.clone()
        };
        train(&mut model, &ctx, &data, &adam)?;
        let test_accuracy = evaluate(&model, &ctx, &data, Split::Test)?;
        records.push(RunRecord {
            run_id,
            graph_seed,
            data_seed,
            architecture: arch.name.clone(),
            test_accuracy,
        });
    }
    Ok(records)
}

fn aggregate(cfg: &SourceLocConfig, records: &[RunRecord]) -> ResultsTable {
    let rows = cfg
        .architectures
        .iter()
        .map(|arch| {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.architecture == arch.name)
                .map(|r| r.test_accuracy)
                .collect();
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std_deviation = if n > 1 {
                let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                (ss / (n as f64 - 1.0)).sqrt()
            } else {
                0.0
            };
            ResultsRow {
                architecture: arch.name.clone(),
                display_name: arch.display_name.clone(),
                mean_accuracy: mean,
                std_deviation,
                run_count: n,
            }
        })
        .collect();
    ResultsTable { rows }
}

impl ResultsTable {
    pub fn row(&self, architecture: &str) -> Option<&ResultsRow> {
        self.rows.iter().find(|r| r.architecture == architecture)
    }
}

/// CSV: run_id, graph_seed, data_seed, architecture, test_accuracy.
pub fn write_run_csv<W: Write>(records: &[RunRecord], mut w: W) -> Result<()> {
    writeln!(w, "run_id,graph_seed,data_seed,architecture,test_accuracy")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.run_id, r.graph_seed, r.data_seed, r.architecture, r.test_accuracy
        )?;
    }
    Ok(())
}

/// CSV: architecture, mean_accuracy, std_deviation, run_count.
pub fn write_aggregate_csv<W: Write>(table: &ResultsTable, mut w: W) -> Result<()> {
    writeln!(w, "architecture,mean_accuracy,std_deviation,run_count")?;
    for r in &table.rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.architecture, r.mean_accuracy, r.std_deviation, r.run_count
        )?;
    }
    Ok(())
}

/// Aligned text table of mean accuracy (and standard deviation) per model.
pub fn write_text_table<W: Write>(table: &ResultsTable, mut w: W) -> Result<()> {
    let width = table
        .rows
        .iter()
        .map(|r| r.display_name.len())
        .max()
        .unwrap_or(5)
        .max("Model".len());
    writeln!(w, "{:<width$}  Accuracy", "Model", width = width)?;
    for r in &table.rows {
        writeln!(
            w,
            "{:<width$}  {:.2}(±{:>5.2})%",
            r.display_name,
            100.0 * r.mean_accuracy,
            100.0 * r.std_deviation,
            width = width
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_labels_follow_contiguous_blocks() {
        assert_eq!(label_of_node(1, 50, 5).unwrap(), 1);
        assert_eq!(label_of_node(50, 50, 5).unwrap(), 5);
        assert_eq!(label_of_node(23, 50, 5).unwrap(), 3);
        assert_eq!(label_of_node(10, 50, 5).unwrap(), 1);
        assert_eq!(label_of_node(11, 50, 5).unwrap(), 2);
        assert!(label_of_node(0, 50, 5).is_err());
        assert!(label_of_node(51, 50, 5).is_err());
    }

    #[test]
    fn source_samples_match_the_dense_power_oracle() {
        let cfg = SourceLocConfig::desk_scale(3);
        let (g, _) = sample_connected_sbm(&cfg, 0).unwrap();
        let mut rng = rng::stream(9, "sample-test", &[]);
        let dense = g.shift().to_dense();
        for _ in 0..10 {
            let before = rng.clone();
            let (x, label) = gen_source_sample(&g, 5, 50, &mut rng).unwrap();
            // replay the draws to recover (community, node, t)
            let mut replay = before;
            let community = replay.random_range(1..=5usize);
            let node = (community - 1) * 10 + replay.random_range(0..10usize);
            let t = replay.random_range(0..=50usize);
            assert_eq!(label, community);
            assert_eq!(label_of_node(node + 1, 50, 5).unwrap(), community);
            let mut power: ndarray::Array2<f64> = ndarray::Array2::eye(50);
            for _ in 0..t {
                power = dense.dot(&power);
            }
            let err = (0..50)
                .map(|i| (x.values()[(i, 0)] - power[(i, node)]).abs())
                .fold(0.0f64, f64::max);
            assert!(err < 1e-10);
            // diffusion under unit spectral radius stays bounded
            assert!(x.max_abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn unnormalized_graphs_are_rejected() {
        let g = build_sbm(10, 2, 1.0, 1.0, 0).unwrap();
        let mut rng = rng::stream(0, "x", &[]);
        assert!(gen_source_sample(&g, 2, 5, &mut rng).is_err());
    }

    #[test]
    fn disconnected_sampling_fails_after_retries() {
        let cfg = SourceLocConfig {
            p_intra: 1.0,
            p_inter: 0.0,
            ..SourceLocConfig::desk_scale(1)
        };
        assert!(matches!(
            sample_connected_sbm(&cfg, 0),
            Err(Error::ExperimentFailure(_))
        ));
    }

    #[test]
    fn single_run_has_zero_std() {
        let mut cfg = SourceLocConfig::desk_scale(7);
        cfg.num_train = 60;
        cfg.num_test = 20;
        cfg.num_graph_realizations = 1;
        cfg.num_data_realizations = 1;
        cfg.adam.epochs = 1;
        cfg.architectures = default_architectures(2, 3, 3, 1, 5)
            .into_iter()
            .filter(|a| a.name == "polynomial" || a.name == "ev")
            .collect();
        let (table, records) = run_source_localization(&cfg).unwrap();
        assert_eq!(records.len(), 2);
        for row in &table.rows {
            assert_eq!(row.run_count, 1);
            assert_eq!(row.std_deviation, 0.0);
            assert!(row.mean_accuracy >= 0.0 && row.mean_accuracy <= 1.0);
        }
    }

    #[test]
    fn parallel_and_sequential_runs_agree_bitwise() {
        let mut cfg = SourceLocConfig::desk_scale(11);
        cfg.num_train = 40;
        cfg.num_test = 10;
        cfg.num_graph_realizations = 2;
        cfg.num_data_realizations = 1;
        cfg.adam.epochs = 1;
        cfg.architectures = default_architectures(2, 3, 3, 1, 5)
            .into_iter()
            .filter(|a| a.name == "polynomial" || a.name == "hev-degree")
            .collect();
        cfg.workers = 1;
        let (_, sequential) = run_source_localization(&cfg).unwrap();
        cfg.workers = 2;
        let (_, parallel) = run_source_localization(&cfg).unwrap();
        assert_eq!(sequential, parallel);
    }

    #[test]
    fn table_output_is_aligned_and_ordered() {
        let table = ResultsTable {
            rows: vec![
                ResultsRow {
                    architecture: "spectral".into(),
                    display_name: "Spectral".into(),
                    mean_accuracy: 0.2689,
                    std_deviation: 0.0087,
                    run_count: 100,
                },
                ResultsRow {
                    architecture: "ev".into(),
                    display_name: "Edge Variant (EV)".into(),
                    mean_accuracy: 0.8547,
                    std_deviation: 0.1077,
                    run_count: 100,
                },
            ],
        };
        let mut buf = Vec::new();
        write_text_table(&table, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("26.89"));
        assert!(text.contains("85.47"));
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("Model"));
    }
}
