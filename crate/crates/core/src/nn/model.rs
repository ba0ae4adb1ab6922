//! Model assembly, forward evaluation, and reverse-mode gradients.

use ndarray::Array2;
use rand::Rng;

use crate::eigen::{eigendecompose, Spectrum};
use crate::error::{Error, Result};
use crate::filters::{
    cubic_spline_kernel, select_privileged, spectral_ev_basis, EVParams, FilterCache,
    FilterContext, FilterParams, HEVParams, NVParams, PolyParams, SpectralEVBasis,
    SpectralEvParams, SpectralParams,
};
use crate::graph::Graph;
use crate::rng;
use crate::signal::GraphSignal;

use super::train::softmax;
use super::{Activation, FamilySpec, ModelSpec};

/// A graph bundled with whatever spectral structure the model families need.
#[derive(Debug, Clone)]
pub struct GraphContext {
    graph: Graph,
    spectrum: Option<Spectrum>,
    basis: Option<SpectralEVBasis>,
}

impl GraphContext {
    /// Context for vertex-domain families only.
    pub fn vertex_only(graph: Graph) -> Self {
        Self {
            graph,
            spectrum: None,
            basis: None,
        }
    }

    /// Computes the eigendecomposition (and, if needed, the spectral
    /// edge-variant basis) demanded by `spec`.
    pub fn for_model_spec(graph: Graph, spec: &ModelSpec) -> Result<Self> {
        let spectrum = if spec.needs_spectrum() {
            Some(eigendecompose(&graph)?)
        } else {
            None
        };
        let basis = if spec.needs_basis() {
            let sp = spectrum.as_ref().expect("basis implies spectrum");
            Some(spectral_ev_basis(sp, &graph)?)
        } else {
            None
        };
        Ok(Self {
            graph,
            spectrum,
            basis,
        })
    }

    pub fn with_spectrum(graph: Graph) -> Result<Self> {
        let spectrum = Some(eigendecompose(&graph)?);
        Ok(Self {
            graph,
            spectrum,
            basis: None,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn spectrum(&self) -> Option<&Spectrum> {
        self.spectrum.as_ref()
    }

    pub fn basis(&self) -> Option<&SpectralEVBasis> {
        self.basis.as_ref()
    }

    pub fn filter_context(&self) -> FilterContext<'_> {
        FilterContext {
            graph: &self.graph,
            spectrum: self.spectrum.as_ref(),
            basis: self.basis.as_ref(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Layer {
    pub(crate) in_features: usize,
    pub(crate) out_features: usize,
    pub(crate) activation: Activation,
    pub(crate) family: FamilySpec,
    /// banks[f][g] maps input feature g into output feature f.
    pub(crate) banks: Vec<Vec<FilterParams>>,
}

/// Layer construction for archive reloads.
pub(crate) fn make_layer(
    in_features: usize,
    out_features: usize,
    activation: Activation,
    family: FamilySpec,
    banks: Vec<Vec<FilterParams>>,
) -> Layer {
    Layer {
        in_features,
        out_features,
        activation,
        family,
        banks,
    }
}

/// Model assembly from prebuilt parts, validating the readout shape.
pub(crate) fn assemble_model(
    num_nodes: usize,
    num_classes: usize,
    layers: Vec<Layer>,
    readout: Array2<f64>,
    offsets: Vec<f64>,
) -> Result<Model> {
    let final_features = layers
        .last()
        .ok_or_else(|| Error::invalid("a model needs at least one filter layer"))?
        .out_features;
    if readout.nrows() != num_nodes * final_features || readout.ncols() != num_classes {
        return Err(Error::invalid(format!(
            "readout is {}x{} but the model needs {}x{}",
            readout.nrows(),
            readout.ncols(),
            num_nodes * final_features,
            num_classes
        )));
    }
    if offsets.len() != num_classes {
        return Err(Error::invalid("offset count must match the classes"));
    }
    Ok(Model {
        num_nodes,
        num_classes,
        layers,
        readout,
        offsets,
    })
}

/// Layered graph-filter model with a dense softmax readout over the
/// flattened node-major features.
#[derive(Debug, Clone)]
pub struct Model {
    pub(crate) num_nodes: usize,
    pub(crate) num_classes: usize,
    pub(crate) layers: Vec<Layer>,
    /// (num_nodes * final_features) x num_classes.
    pub(crate) readout: Array2<f64>,
    pub(crate) offsets: Vec<f64>,
}

pub(crate) struct LayerTrace {
    input: Array2<f64>,
    preact: Array2<f64>,
    caches: Vec<Vec<FilterCache>>,
}

pub(crate) struct ForwardTrace {
    layers: Vec<LayerTrace>,
    flat: Vec<f64>,
    pub(crate) probs: Vec<f64>,
}

impl Model {
    /// Initializes a model with independent uniform parameters on
    /// [-1/sqrt(fan), +1/sqrt(fan)], where fan counts the scalars feeding one
    /// output node feature at the parameter's stage (chain stages past the
    /// first do not see the input features). The readout starts uniform over
    /// its own fan with zero offsets.
    pub fn init(spec: &ModelSpec, ctx: &GraphContext, seed: u64) -> Result<Model> {
        spec.validate()?;
        let n = ctx.graph().num_nodes();
        let mut stream = rng::stream(seed, "model-init", &[]);
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (layer_idx, layer_spec) in spec.layers.iter().enumerate() {
            let selection_seed = rng::derive_seed(seed, "privileged-selection", &[layer_idx as u64]);
            let template = build_template(layer_spec, ctx, selection_seed)?;
            let fans = stage_fans(&template, layer_spec.in_features);
            let mut banks = Vec::with_capacity(layer_spec.out_features);
            for _f in 0..layer_spec.out_features {
                let mut row = Vec::with_capacity(layer_spec.in_features);
                for _g in 0..layer_spec.in_features {
                    let mut filter = template.clone();
                    let values: Vec<f64> = fans
                        .iter()
                        .flat_map(|&(count, fan)| {
                            let bound = 1.0 / (fan.max(1.0)).sqrt();
                            (0..count)
                                .map(|_| stream.random_range(-bound..bound))
                                .collect::<Vec<_>>()
                        })
                        .collect();
                    filter.read_params(&values)?;
                    row.push(filter);
                }
                banks.push(row);
            }
            layers.push(Layer {
                in_features: layer_spec.in_features,
                out_features: layer_spec.out_features,
                activation: layer_spec.activation,
                family: layer_spec.family.clone(),
                banks,
            });
        }
        let final_features = spec.layers.last().expect("validated").out_features;
        let rows = n * final_features;
        let bound = 1.0 / (rows as f64).sqrt();
        let readout =
            Array2::from_shape_fn((rows, spec.num_classes), |_| stream.random_range(-bound..bound));
        let offsets = vec![0.0; spec.num_classes];
        Ok(Model {
            num_nodes: n,
            num_classes: spec.num_classes,
            layers,
            readout,
            offsets,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn in_features(&self) -> usize {
        self.layers.first().map_or(1, |l| l.in_features)
    }

    pub fn num_params(&self) -> usize {
        let filters: usize = self
            .layers
            .iter()
            .flat_map(|l| l.banks.iter().flatten())
            .map(|f| f.num_params())
            .sum();
        filters + self.readout.len() + self.offsets.len()
    }

    /// Named parameter blocks in flat order, as (name, length) pairs.
    pub fn param_layout(&self) -> Vec<(String, usize)> {
        let mut layout = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            for (f, row) in layer.banks.iter().enumerate() {
                for (g, filter) in row.iter().enumerate() {
                    layout.push((
                        format!("layer{l}.{}[{f},{g}]", filter.family_name()),
                        filter.num_params(),
                    ));
                }
            }
        }
        layout.push(("readout.weights".to_string(), self.readout.len()));
        layout.push(("readout.offsets".to_string(), self.offsets.len()));
        layout
    }

    /// All learnable scalars in the canonical flat order: layers (f-major,
    /// g-minor, family layout inside), then the readout row-major, then the
    /// offsets.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            for row in &layer.banks {
                for filter in row {
                    filter.append_params(&mut out);
                }
            }
        }
        out.extend(self.readout.iter());
        out.extend_from_slice(&self.offsets);
        out
    }

    pub fn set_params_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                values.len()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for row in &mut layer.banks {
                for filter in row {
                    let len = filter.num_params();
                    filter.read_params(&values[offset..offset + len])?;
                    offset += len;
                }
            }
        }
        for dst in self.readout.iter_mut() {
            *dst = values[offset];
            offset += 1;
        }
        self.offsets.copy_from_slice(&values[offset..]);
        Ok(())
    }

    /// Class probabilities for one input signal.
    pub fn forward(&self, ctx: &GraphContext, x: &GraphSignal) -> Result<Vec<f64>> {
        Ok(self.forward_trace(ctx, x)?.probs)
    }

    /// Smallest |pre-activation| over all layers for one input; gradient
    /// checks use this to keep finite differences away from ReLU kinks.
    pub fn min_abs_preactivation(&self, ctx: &GraphContext, x: &GraphSignal) -> Result<f64> {
        let trace = self.forward_trace(ctx, x)?;
        let mut margin = f64::INFINITY;
        for layer in &trace.layers {
            for v in layer.preact.iter() {
                margin = margin.min(v.abs());
            }
        }
        Ok(margin)
    }

    pub(crate) fn forward_trace(&self, ctx: &GraphContext, x: &GraphSignal) -> Result<ForwardTrace> {
        if x.num_nodes() != self.num_nodes {
            return Err(Error::invalid(format!(
                "input has {} rows but the model covers {} nodes",
                x.num_nodes(),
                self.num_nodes
            )));
        }
        if x.num_features() != self.in_features() {
            return Err(Error::invalid(format!(
                "input has {} features but the first layer expects {}",
                x.num_features(),
                self.in_features()
            )));
        }
        let fctx = ctx.filter_context();
        let mut current = x.values().clone();
        let mut traces = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = current;
            let mut preact: Array2<f64> = Array2::zeros((self.num_nodes, layer.out_features));
            let mut caches = Vec::with_capacity(layer.out_features);
            for (f, row) in layer.banks.iter().enumerate() {
                let mut row_caches = Vec::with_capacity(layer.in_features);
                // summation over input features in fixed ascending order
                for (g, filter) in row.iter().enumerate() {
                    let column = GraphSignal::from_matrix(
                        input
                            .column(g)
                            .to_owned()
                            .into_shape_with_order((self.num_nodes, 1))
                            .expect("column reshape"),
                    );
                    let (y, cache) = filter.forward_with_cache(&fctx, &column)?;
                    for i in 0..self.num_nodes {
                        preact[(i, f)] += y.values()[(i, 0)];
                    }
                    row_caches.push(cache);
                }
                caches.push(row_caches);
            }
            current = preact.mapv(|v| layer.activation.apply(v));
            traces.push(LayerTrace {
                input,
                preact,
                caches,
            });
        }
        let flat = flatten_node_major(&current);
        let logits: Vec<f64> = (0..self.num_classes)
            .map(|c| {
                let mut s = self.offsets[c];
                for (j, &v) in flat.iter().enumerate() {
                    s += self.readout[(j, c)] * v;
                }
                s
            })
            .collect();
        let probs = softmax(&logits);
        Ok(ForwardTrace {
            layers: traces,
            flat,
            probs,
        })
    }

    /// Mean cross-entropy loss, mean flat gradient, and the number of
    /// correctly classified samples over a batch.
    pub fn batch_loss_grads(
        &self,
        ctx: &GraphContext,
        batch: &[(&GraphSignal, usize)],
    ) -> Result<(f64, Vec<f64>, usize)> {
        if batch.is_empty() {
            return Err(Error::invalid("cannot take a step on an empty batch"));
        }
        let mut grads = vec![0.0; self.num_params()];
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for &(signal, label) in batch {
            let trace = self.forward_trace(ctx, signal)?;
            loss_sum += super::train::cross_entropy(&trace.probs, label)?;
            if argmax_lowest(&trace.probs) + 1 == label {
                correct += 1;
            }
            self.accumulate_sample_grads(ctx, signal, label, &trace, &mut grads)?;
        }
        let inv = 1.0 / batch.len() as f64;
        for g in &mut grads {
            *g *= inv;
        }
        Ok((loss_sum * inv, grads, correct))
    }

    fn accumulate_sample_grads(
        &self,
        ctx: &GraphContext,
        x: &GraphSignal,
        label: usize,
        trace: &ForwardTrace,
        grads: &mut [f64],
    ) -> Result<()> {
        let fctx = ctx.filter_context();
        let probs = &trace.probs;
        // loss = -ln(p_label + 1e-12); the epsilon scales the logit gradient
        let p = probs[label - 1];
        let scale = p / (p + super::train::PROB_EPS);
        let dlogits: Vec<f64> = (0..self.num_classes)
            .map(|c| {
                let indicator = if c + 1 == label { 1.0 } else { 0.0 };
                scale * (probs[c] - indicator)
            })
            .collect();

        // readout blocks live at the tail of the flat layout
        let filters_len: usize = self
            .layers
            .iter()
            .flat_map(|l| l.banks.iter().flatten())
            .map(|f| f.num_params())
            .sum();
        let (filter_grads, tail) = grads.split_at_mut(filters_len);
        let (w_grads, o_grads) = tail.split_at_mut(self.readout.len());
        let cols = self.num_classes;
        for (j, &v) in trace.flat.iter().enumerate() {
            for c in 0..cols {
                w_grads[j * cols + c] += v * dlogits[c];
            }
        }
        for c in 0..cols {
            o_grads[c] += dlogits[c];
        }

        // gradient w.r.t. the flattened features, then walk layers backward
        let last_features = self.layers.last().expect("validated").out_features;
        let mut dflat = vec![0.0; trace.flat.len()];
        for (j, slot) in dflat.iter_mut().enumerate() {
            let mut s = 0.0;
            for c in 0..cols {
                s += self.readout[(j, c)] * dlogits[c];
            }
            *slot = s;
        }
        let mut dz = unflatten_node_major(&dflat, self.num_nodes, last_features);

        // per-layer flat offsets for the filter blocks
        let mut layer_offsets = Vec::with_capacity(self.layers.len());
        let mut offset = 0;
        for layer in &self.layers {
            layer_offsets.push(offset);
            offset += layer
                .banks
                .iter()
                .flatten()
                .map(|f| f.num_params())
                .sum::<usize>();
        }

        for (l, layer) in self.layers.iter().enumerate().rev() {
            let trace_l = &trace.layers[l];
            let dpre = {
                let mut d = dz.clone();
                for ((i, f), v) in d.indexed_iter_mut() {
                    *v *= layer.activation.derivative(trace_l.preact[(i, f)]);
                }
                d
            };
            let need_input = l > 0;
            let mut dinput: Array2<f64> =
                Array2::zeros((self.num_nodes, layer.in_features));
            let mut slot = layer_offsets[l];
            for (f, row) in layer.banks.iter().enumerate() {
                let upstream = GraphSignal::from_matrix(
                    dpre.column(f)
                        .to_owned()
                        .into_shape_with_order((self.num_nodes, 1))
                        .expect("column reshape"),
                );
                for (g, filter) in row.iter().enumerate() {
                    let column = GraphSignal::from_matrix(
                        trace_l
                            .input
                            .column(g)
                            .to_owned()
                            .into_shape_with_order((self.num_nodes, 1))
                            .expect("column reshape"),
                    );
                    let (pgrads, igrad) = filter.backward(
                        &fctx,
                        &column,
                        &trace_l.caches[f][g],
                        &upstream,
                        need_input,
                    )?;
                    let len = pgrads.len();
                    for (dst, src) in filter_grads[slot..slot + len].iter_mut().zip(&pgrads) {
                        *dst += src;
                    }
                    slot += len;
                    if let Some(ig) = igrad {
                        for i in 0..self.num_nodes {
                            dinput[(i, g)] += ig.values()[(i, 0)];
                        }
                    }
                }
            }
            dz = dinput;
        }
        let _ = x;
        Ok(())
    }
}

fn build_template(
    layer_spec: &super::LayerSpec,
    ctx: &GraphContext,
    selection_seed: u64,
) -> Result<FilterParams> {
    let g = ctx.graph();
    Ok(match layer_spec.family {
        FamilySpec::Polynomial { order } => FilterParams::Polynomial(PolyParams::zeros(order)),
        FamilySpec::EdgeVariant { order, self_loops } => {
            FilterParams::EdgeVariant(EVParams::zeros(g, order, self_loops)?)
        }
        FamilySpec::Spectral { num_knots } => {
            let sp = ctx
                .spectrum()
                .ok_or_else(|| Error::invalid("spectral layers need an eigendecomposition"))?;
            let kernel = cubic_spline_kernel(sp.eigenvalues(), num_knots)?;
            FilterParams::Spectral(SpectralParams::new(kernel, vec![0.0; num_knots])?)
        }
        FamilySpec::NodeVariant {
            order,
            size,
            strategy,
        } => {
            let set = select_privileged(g, strategy, size, selection_seed)?;
            FilterParams::NodeVariant(NVParams::zeros(set, order))
        }
        FamilySpec::HybridEv {
            order,
            size,
            strategy,
        } => {
            let set = select_privileged(g, strategy, size, selection_seed)?;
            FilterParams::HybridEv(HEVParams::zeros(g, set, order)?)
        }
        FamilySpec::SpectralEv { order } => {
            let basis = ctx
                .basis()
                .ok_or_else(|| Error::invalid("spectral-ev layers need the admissible basis"))?;
            FilterParams::SpectralEv(SpectralEvParams::zeros(order, basis.rank())?)
        }
    })
}

/// (scalar count, fan) segments of one filter's flat layout, in order.
fn stage_fans(filter: &FilterParams, in_features: usize) -> Vec<(usize, f64)> {
    let fin = in_features as f64;
    match filter {
        FilterParams::Polynomial(p) => vec![(p.num_params(), p.num_params() as f64 * fin)],
        FilterParams::Spectral(p) => vec![(p.num_params(), p.num_params() as f64 * fin)],
        FilterParams::NodeVariant(p) => {
            let taps_per_node = p.order() + 1;
            vec![(p.num_params(), taps_per_node as f64 * fin)]
        }
        FilterParams::EdgeVariant(p) => {
            let nnz = p.support().nnz();
            let avg_row = nnz as f64 / p.support().num_rows() as f64;
            let mut fans = vec![(nnz, avg_row * fin)];
            for _ in 1..p.order() {
                fans.push((nnz, avg_row));
            }
            fans
        }
        FilterParams::HybridEv(p) => {
            let k1 = p.global_taps().len();
            let b = p.diag0().len();
            let nnz = p.edge_stages().first().map_or(0, |m| m.nnz());
            let avg_row = if b > 0 { nnz as f64 / b as f64 } else { 1.0 };
            let mut fans = vec![(k1, k1 as f64 * fin), (b, fin)];
            for k in 0..p.order() {
                fans.push((nnz, if k == 0 { avg_row * fin } else { avg_row }));
            }
            fans
        }
        FilterParams::SpectralEv(p) => {
            let r = p.rank();
            let mut fans = vec![(r, r as f64 * fin)];
            for _ in 1..p.order() {
                fans.push((r, r as f64));
            }
            fans
        }
    }
}

pub(crate) fn flatten_node_major(z: &Array2<f64>) -> Vec<f64> {
    let (n, f) = z.dim();
    let mut flat = Vec::with_capacity(n * f);
    for i in 0..n {
        for c in 0..f {
            flat.push(z[(i, c)]);
        }
    }
    flat
}

fn unflatten_node_major(flat: &[f64], n: usize, f: usize) -> Array2<f64> {
    let mut z = Array2::zeros((n, f));
    for i in 0..n {
        for c in 0..f {
            z[(i, c)] = flat[i * f + c];
        }
    }
    z
}

pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::SelectionStrategy;
    use crate::nn::{Activation, LayerSpec};

    fn poly_spec(classes: usize) -> ModelSpec {
        ModelSpec {
            layers: vec![LayerSpec {
                in_features: 1,
                out_features: 2,
                family: FamilySpec::Polynomial { order: 2 },
                activation: Activation::Relu,
            }],
            num_classes: classes,
        }
    }

    fn ctx() -> GraphContext {
        let g = Graph::undirected_adjacency(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        GraphContext::vertex_only(g)
    }

    #[test]
    fn zero_readout_gives_uniform_probabilities() {
        let ctx = ctx();
        let mut model = Model::init(&poly_spec(4), &ctx, 1).unwrap();
        let mut params = model.params_flat();
        let tail = model.readout.len() + model.offsets.len();
        let len = params.len();
        for v in &mut params[len - tail..] {
            *v = 0.0;
        }
        model.set_params_flat(&params).unwrap();
        let probs = model
            .forward(&ctx, &GraphSignal::from_column(vec![1.0, 0.0, -1.0, 2.0]).unwrap())
            .unwrap();
        for p in probs {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn params_round_trip_through_the_flat_layout() {
        let ctx = ctx();
        let model = Model::init(&poly_spec(3), &ctx, 5).unwrap();
        let params = model.params_flat();
        assert_eq!(params.len(), model.num_params());
        let mut other = Model::init(&poly_spec(3), &ctx, 6).unwrap();
        assert_ne!(other.params_flat(), params);
        other.set_params_flat(&params).unwrap();
        assert_eq!(other.params_flat(), params);
    }

    #[test]
    fn layout_names_cover_all_parameters() {
        let ctx = ctx();
        let spec = ModelSpec {
            layers: vec![LayerSpec {
                in_features: 1,
                out_features: 1,
                family: FamilySpec::HybridEv {
                    order: 1,
                    size: 2,
                    strategy: SelectionStrategy::MaxDegree,
                },
                activation: Activation::Relu,
            }],
            num_classes: 2,
        };
        let model = Model::init(&spec, &ctx, 2).unwrap();
        let total: usize = model.param_layout().iter().map(|(_, len)| len).sum();
        assert_eq!(total, model.num_params());
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let ctx = ctx();
        let a = Model::init(&poly_spec(2), &ctx, 9).unwrap();
        let b = Model::init(&poly_spec(2), &ctx, 9).unwrap();
        assert_eq!(a.params_flat(), b.params_flat());
    }

    #[test]
    fn selective_bank_passes_one_feature() {
        // two input features; filter (1,1) identity, (1,2) zero
        let ctx = ctx();
        let spec = ModelSpec {
            layers: vec![LayerSpec {
                in_features: 2,
                out_features: 1,
                family: FamilySpec::Polynomial { order: 0 },
                activation: Activation::Relu,
            }],
            num_classes: 2,
        };
        let mut model = Model::init(&spec, &ctx, 3).unwrap();
        let mut params = model.params_flat();
        params[0] = 1.0; // H_{1,1} = I
        params[1] = 0.0; // H_{1,2} = 0
        model.set_params_flat(&params).unwrap();
        let x = GraphSignal::new(
            Array2::from_shape_vec((4, 2), vec![1.0, 9.0, 2.0, 9.0, 3.0, 9.0, 4.0, 9.0]).unwrap(),
        )
        .unwrap();
        let trace = model.forward_trace(&ctx, &x).unwrap();
        assert_eq!(trace.flat, vec![1.0, 2.0, 3.0, 4.0]);
    }
}
