//! JSON parameter archives.
//!
//! One archive stores one filter or one model: a family tag, shape
//! metadata, and flat coefficient arrays in row-major order. JSON numbers
//! print in shortest round-trip decimal form, so saving and reloading is
//! bit-exact. Sparse supports are stored as parallel (rows, cols) index
//! arrays in compressed-row order.
//!
//! Filter schema (tagged by `family`):
//! - `polynomial`: `taps`
//! - `edge-variant`: `num_nodes`, `self_loops`, `support`, `coefficients`
//!   (one value array per stage, support order)
//! - `spectral`: `kernel_rows`, `kernel` (row-major), `weights`
//! - `node-variant`: `strategy`, `privileged` (nodes, assignment), `taps`
//!   (row-major, shift order major)
//! - `hybrid-ev`: `strategy`, `privileged`, `support`, `global_taps`,
//!   `diag0`, `edge_stages`
//! - `spectral-ev`: `mu` (the admissible-response basis is recomputed
//!   deterministically from the graph)
//!
//! Model schema: `num_nodes`, `num_classes`, `layers` (each with feature
//! counts, activation, and filters in output-major order), and the dense
//! `readout` block.

use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{
    ev_support, privileged_support, EVParams, FilterParams, HEVParams, NVParams, PolyParams,
    PrivilegedSet, SelectionStrategy, SpectralEvParams, SpectralParams,
};
use crate::graph::Graph;
use crate::nn::{Activation, FamilySpec, GraphContext, LayerSpec, Model, ModelSpec};
use crate::sparse::{SparseMatrix, SparsityPattern};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SupportArchive {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl SupportArchive {
    fn from_pattern(pattern: &SparsityPattern) -> Self {
        let (rows, cols) = pattern.iter().unzip();
        Self { rows, cols }
    }

    fn to_pattern(&self, num_nodes: usize) -> Result<SparsityPattern> {
        if self.rows.len() != self.cols.len() {
            return Err(Error::Archive(
                "support rows and cols differ in length".to_string(),
            ));
        }
        SparsityPattern::from_pairs(
            num_nodes,
            self.rows.iter().copied().zip(self.cols.iter().copied()),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PrivilegedArchive {
    pub nodes: Vec<usize>,
    pub assignment: Vec<usize>,
}

impl PrivilegedArchive {
    fn from_set(set: &PrivilegedSet) -> Self {
        Self {
            nodes: set.nodes().to_vec(),
            assignment: set.assignment().to_vec(),
        }
    }

    fn to_set(&self) -> Result<PrivilegedSet> {
        PrivilegedSet::new(self.nodes.clone(), self.assignment.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FilterArchive {
    Polynomial {
        taps: Vec<f64>,
    },
    EdgeVariant {
        num_nodes: usize,
        self_loops: bool,
        support: SupportArchive,
        coefficients: Vec<Vec<f64>>,
    },
    Spectral {
        kernel_rows: usize,
        kernel: Vec<f64>,
        weights: Vec<f64>,
    },
    NodeVariant {
        strategy: String,
        privileged: PrivilegedArchive,
        taps: Vec<f64>,
    },
    HybridEv {
        strategy: String,
        privileged: PrivilegedArchive,
        support: SupportArchive,
        global_taps: Vec<f64>,
        diag0: Vec<f64>,
        edge_stages: Vec<Vec<f64>>,
    },
    SpectralEv {
        mu: Vec<Vec<f64>>,
    },
}

/// Captures one filter; NV/HEV record the strategy that selected their
/// privileged set so the layer spec can be reconstructed.
pub fn filter_to_archive(filter: &FilterParams, strategy: Option<SelectionStrategy>) -> FilterArchive {
    let strategy_name = strategy
        .unwrap_or(SelectionStrategy::MaxDegree)
        .name()
        .to_string();
    match filter {
        FilterParams::Polynomial(p) => FilterArchive::Polynomial {
            taps: p.taps().to_vec(),
        },
        FilterParams::EdgeVariant(p) => FilterArchive::EdgeVariant {
            num_nodes: p.support().num_rows(),
            self_loops: p.use_self_loops(),
            support: SupportArchive::from_pattern(p.support()),
            coefficients: p.coeffs().iter().map(|c| c.values().to_vec()).collect(),
        },
        FilterParams::Spectral(p) => FilterArchive::Spectral {
            kernel_rows: p.kernel().nrows(),
            kernel: p.kernel().iter().copied().collect(),
            weights: p.weights().to_vec(),
        },
        FilterParams::NodeVariant(p) => FilterArchive::NodeVariant {
            strategy: strategy_name,
            privileged: PrivilegedArchive::from_set(p.privileged()),
            taps: p.taps().iter().copied().collect(),
        },
        FilterParams::HybridEv(p) => FilterArchive::HybridEv {
            strategy: strategy_name,
            privileged: PrivilegedArchive::from_set(p.privileged()),
            support: SupportArchive::from_pattern(p.support()),
            global_taps: p.global_taps().to_vec(),
            diag0: p.diag0().to_vec(),
            edge_stages: p
                .edge_stages()
                .iter()
                .map(|m| m.values().to_vec())
                .collect(),
        },
        FilterParams::SpectralEv(p) => FilterArchive::SpectralEv { mu: p.mu().to_vec() },
    }
}

impl FilterArchive {
    pub fn family_name(&self) -> &'static str {
        match self {
            FilterArchive::Polynomial { .. } => "polynomial",
            FilterArchive::EdgeVariant { .. } => "edge-variant",
            FilterArchive::Spectral { .. } => "spectral",
            FilterArchive::NodeVariant { .. } => "node-variant",
            FilterArchive::HybridEv { .. } => "hybrid-ev",
            FilterArchive::SpectralEv { .. } => "spectral-ev",
        }
    }

    /// Rebuilds the filter against a graph, validating support compatibility.
    pub fn instantiate(&self, graph: &Graph) -> Result<FilterParams> {
        let n = graph.num_nodes();
        match self {
            FilterArchive::Polynomial { taps } => {
                Ok(FilterParams::Polynomial(PolyParams::new(taps.clone())?))
            }
            FilterArchive::EdgeVariant {
                num_nodes,
                self_loops,
                support,
                coefficients,
            } => {
                if *num_nodes != n {
                    return Err(Error::Archive(format!(
                        "edge-variant filter covers {num_nodes} nodes, graph has {n}"
                    )));
                }
                let pattern = support.to_pattern(n)?;
                let expected = ev_support(graph, *self_loops);
                if &pattern != expected.as_ref() {
                    return Err(Error::Archive(
                        "edge-variant support does not match this graph".to_string(),
                    ));
                }
                let pattern = Arc::new(pattern);
                let coeffs = coefficients
                    .iter()
                    .map(|v| SparseMatrix::from_values(Arc::clone(&pattern), v.clone()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FilterParams::EdgeVariant(EVParams::new(
                    coeffs,
                    *self_loops,
                )?))
            }
            FilterArchive::Spectral {
                kernel_rows,
                kernel,
                weights,
            } => {
                if *kernel_rows != n {
                    return Err(Error::Archive(format!(
                        "spectral kernel covers {kernel_rows} nodes, graph has {n}"
                    )));
                }
                if kernel.len() % kernel_rows != 0 {
                    return Err(Error::Archive("kernel length is not rectangular".into()));
                }
                let b = kernel.len() / kernel_rows;
                let kernel = Array2::from_shape_vec((*kernel_rows, b), kernel.clone())
                    .map_err(|e| Error::Archive(e.to_string()))?;
                Ok(FilterParams::Spectral(SpectralParams::new(
                    kernel,
                    weights.clone(),
                )?))
            }
            FilterArchive::NodeVariant {
                privileged, taps, ..
            } => {
                let set = privileged.to_set()?;
                if set.num_nodes() != n {
                    return Err(Error::Archive(
                        "node-variant assignment does not cover this graph".to_string(),
                    ));
                }
                if taps.len() % set.size() != 0 {
                    return Err(Error::Archive("tap matrix is not rectangular".into()));
                }
                let rows = taps.len() / set.size();
                let taps = Array2::from_shape_vec((rows, set.size()), taps.clone())
                    .map_err(|e| Error::Archive(e.to_string()))?;
                Ok(FilterParams::NodeVariant(NVParams::new(set, taps)?))
            }
            FilterArchive::HybridEv {
                privileged,
                support,
                global_taps,
                diag0,
                edge_stages,
                ..
            } => {
                let set = privileged.to_set()?;
                let pattern = support.to_pattern(n)?;
                let expected = privileged_support(graph, &set);
                if &pattern != expected.as_ref() {
                    return Err(Error::Archive(
                        "hybrid-ev support does not match this graph".to_string(),
                    ));
                }
                let pattern = Arc::new(pattern);
                let edge = edge_stages
                    .iter()
                    .map(|v| SparseMatrix::from_values(Arc::clone(&pattern), v.clone()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FilterParams::HybridEv(HEVParams::new(
                    graph,
                    set,
                    diag0.clone(),
                    edge,
                    global_taps.clone(),
                )?))
            }
            FilterArchive::SpectralEv { mu } => Ok(FilterParams::SpectralEv(
                SpectralEvParams::new(mu.clone())?,
            )),
        }
    }

    /// The layer family spec this filter was built from.
    pub fn family_spec(&self) -> Result<FamilySpec> {
        Ok(match self {
            FilterArchive::Polynomial { taps } => FamilySpec::Polynomial {
                order: taps.len().saturating_sub(1),
            },
            FilterArchive::EdgeVariant {
                self_loops,
                coefficients,
                ..
            } => FamilySpec::EdgeVariant {
                order: coefficients.len(),
                self_loops: *self_loops,
            },
            FilterArchive::Spectral { weights, .. } => FamilySpec::Spectral {
                num_knots: weights.len(),
            },
            FilterArchive::NodeVariant {
                strategy,
                privileged,
                taps,
            } => FamilySpec::NodeVariant {
                order: (taps.len() / privileged.nodes.len()).saturating_sub(1),
                size: privileged.nodes.len(),
                strategy: SelectionStrategy::parse(strategy)?,
            },
            FilterArchive::HybridEv {
                strategy,
                privileged,
                edge_stages,
                ..
            } => FamilySpec::HybridEv {
                order: edge_stages.len(),
                size: privileged.nodes.len(),
                strategy: SelectionStrategy::parse(strategy)?,
            },
            FilterArchive::SpectralEv { mu } => FamilySpec::SpectralEv { order: mu.len() },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)
            .map_err(|e| Error::Archive(e.to_string()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Archive(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerArchive {
    pub in_features: usize,
    pub out_features: usize,
    pub activation: String,
    /// Filters in output-major order: filters[f * in_features + g].
    pub filters: Vec<FilterArchive>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReadoutArchive {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArchive {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub layers: Vec<LayerArchive>,
    pub readout: ReadoutArchive,
}

impl ModelArchive {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)
            .map_err(|e| Error::Archive(e.to_string()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Archive(format!("{}: {e}", path.display())))
    }

    /// The architecture this archive encodes.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let layers = self
            .layers
            .iter()
            .map(|layer| {
                let first = layer
                    .filters
                    .first()
                    .ok_or_else(|| Error::Archive("layer without filters".to_string()))?;
                Ok(LayerSpec {
                    in_features: layer.in_features,
                    out_features: layer.out_features,
                    family: first.family_spec()?,
                    activation: Activation::parse(&layer.activation)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelSpec {
            layers,
            num_classes: self.num_classes,
        })
    }

    /// Rebuilds the model against a prepared context.
    pub fn instantiate(&self, ctx: &GraphContext) -> Result<Model> {
        Model::from_archive(self, ctx)
    }
}

impl Model {
    pub fn to_archive(&self) -> ModelArchive {
        let layers = self
            .layers
            .iter()
            .map(|layer| {
                let strategy = match &layer.family {
                    FamilySpec::NodeVariant { strategy, .. }
                    | FamilySpec::HybridEv { strategy, .. } => Some(*strategy),
                    _ => None,
                };
                LayerArchive {
                    in_features: layer.in_features,
                    out_features: layer.out_features,
                    activation: layer.activation.name().to_string(),
                    filters: layer
                        .banks
                        .iter()
                        .flatten()
                        .map(|f| filter_to_archive(f, strategy))
                        .collect(),
                }
            })
            .collect();
        ModelArchive {
            num_nodes: self.num_nodes,
            num_classes: self.num_classes,
            layers,
            readout: ReadoutArchive {
                rows: self.readout.nrows(),
                cols: self.readout.ncols(),
                weights: self.readout.iter().copied().collect(),
                offsets: self.offsets.clone(),
            },
        }
    }

    pub fn from_archive(archive: &ModelArchive, ctx: &GraphContext) -> Result<Model> {
        if archive.num_nodes != ctx.graph().num_nodes() {
            return Err(Error::Archive(format!(
                "archive covers {} nodes, graph has {}",
                archive.num_nodes,
                ctx.graph().num_nodes()
            )));
        }
        let spec = archive.model_spec()?;
        spec.validate()?;
        let mut layers = Vec::with_capacity(archive.layers.len());
        for (layer, layer_spec) in archive.layers.iter().zip(&spec.layers) {
            if layer.filters.len() != layer.in_features * layer.out_features {
                return Err(Error::Archive(format!(
                    "layer stores {} filters for a {}x{} bank",
                    layer.filters.len(),
                    layer.out_features,
                    layer.in_features
                )));
            }
            let mut filters = layer
                .filters
                .iter()
                .map(|f| f.instantiate(ctx.graph()))
                .collect::<Result<Vec<_>>>()?
                .into_iter();
            let banks = (0..layer.out_features)
                .map(|_| (0..layer.in_features).map(|_| filters.next().expect("count checked")).collect())
                .collect();
            layers.push(crate::nn::make_layer(
                layer.in_features,
                layer.out_features,
                layer_spec.activation,
                layer_spec.family.clone(),
                banks,
            ));
        }
        let readout = &archive.readout;
        if readout.weights.len() != readout.rows * readout.cols
            || readout.offsets.len() != readout.cols
            || readout.cols != archive.num_classes
        {
            return Err(Error::Archive("readout block shape mismatch".to_string()));
        }
        let readout_matrix =
            Array2::from_shape_vec((readout.rows, readout.cols), readout.weights.clone())
                .map_err(|e| Error::Archive(e.to_string()))?;
        crate::nn::assemble_model(
            archive.num_nodes,
            archive.num_classes,
            layers,
            readout_matrix,
            readout.offsets.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_sbm;
    use crate::nn::Activation;

    fn fixture() -> (GraphContext, Model, ModelSpec) {
        let g = build_sbm(12, 2, 0.9, 0.4, 3)
            .unwrap()
            .normalize_by_spectral_radius()
            .unwrap();
        let spec = ModelSpec {
            layers: vec![LayerSpec {
                in_features: 1,
                out_features: 2,
                family: FamilySpec::HybridEv {
                    order: 2,
                    size: 3,
                    strategy: SelectionStrategy::MaxDegree,
                },
                activation: Activation::Relu,
            }],
            num_classes: 2,
        };
        let ctx = GraphContext::for_model_spec(g, &spec).unwrap();
        let model = Model::init(&spec, &ctx, 17).unwrap();
        (ctx, model, spec)
    }

    #[test]
    fn model_archive_round_trip_is_bit_exact() {
        let (ctx, model, _) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.to_archive().save(&path).unwrap();
        let loaded = ModelArchive::load(&path).unwrap();
        let rebuilt = loaded.instantiate(&ctx).unwrap();
        assert_eq!(model.params_flat(), rebuilt.params_flat());
        // outputs agree exactly
        let x = crate::signal::GraphSignal::delta(12, 4).unwrap();
        assert_eq!(
            model.forward(&ctx, &x).unwrap(),
            rebuilt.forward(&ctx, &x).unwrap()
        );
    }

    #[test]
    fn spec_reconstruction_matches_the_original() {
        let (_, model, spec) = fixture();
        let archive = model.to_archive();
        assert_eq!(archive.model_spec().unwrap(), spec);
    }

    #[test]
    fn wrong_graph_is_rejected() {
        let (_, model, spec) = fixture();
        let archive = model.to_archive();
        let other = build_sbm(12, 2, 0.9, 0.4, 99)
            .unwrap()
            .normalize_by_spectral_radius()
            .unwrap();
        let ctx = GraphContext::for_model_spec(other, &spec).unwrap();
        assert!(archive.instantiate(&ctx).is_err());
    }

    #[test]
    fn filter_archives_tag_their_family() {
        let (_, model, _) = fixture();
        let archive = model.to_archive();
        let json = serde_json::to_string(&archive.layers[0].filters[0]).unwrap();
        assert!(json.contains("\"family\":\"hybrid-ev\""));
    }
}
