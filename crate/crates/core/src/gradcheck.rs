//! Finite-difference validation of the analytic gradients.
//!
//! Each family is embedded in a small full model (filter bank, ReLU, dense
//! softmax readout) and the analytic batch gradient is compared against
//! central differences of the batch loss. Runs are deterministic given the
//! seed; sample draws that land too close to a ReLU kink are redrawn so the
//! difference quotient stays on one linear piece.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::filters::SelectionStrategy;
use crate::graph::build_sbm;
use crate::nn::{cross_entropy, Activation, FamilySpec, GraphContext, LayerSpec, Model, ModelSpec};
use crate::rng;
use crate::signal::GraphSignal;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Gradients smaller than this magnitude are measured against it, which
/// turns the relative threshold t into an absolute floor of t * 1e-3
/// (1e-8 at the default tolerance 1e-5).
const DENOM_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct FamilyGradReport {
    pub family: &'static str,
    pub params_checked: usize,
    pub max_rel_error: f64,
}

/// The five trainable families checked by the gradient suite.
pub fn default_families() -> Vec<FamilySpec> {
    vec![
        FamilySpec::Polynomial { order: 3 },
        FamilySpec::Spectral { num_knots: 3 },
        FamilySpec::NodeVariant {
            order: 3,
            size: 3,
            strategy: SelectionStrategy::MaxDegree,
        },
        FamilySpec::EdgeVariant {
            order: 3,
            self_loops: true,
        },
        FamilySpec::HybridEv {
            order: 2,
            size: 3,
            strategy: SelectionStrategy::MaxDegree,
        },
    ]
}

/// Checks every family in `families`, returning one report per family.
pub fn check_families(
    families: &[FamilySpec],
    seed: u64,
    min_params: usize,
) -> Result<Vec<FamilyGradReport>> {
    families
        .iter()
        .map(|f| check_family(f, seed, min_params))
        .collect()
}

/// Embeds one family in a full model and compares at least `min_params`
/// analytic gradients against central finite differences.
pub fn check_family(
    family: &FamilySpec,
    seed: u64,
    min_params: usize,
) -> Result<FamilyGradReport> {
    let graph = connected_test_graph(seed)?;
    let spec = ModelSpec {
        layers: vec![LayerSpec {
            in_features: 1,
            out_features: 2,
            family: family.clone(),
            activation: Activation::Relu,
        }],
        num_classes: 3,
    };
    let ctx = GraphContext::for_model_spec(graph, &spec)?;
    let n = ctx.graph().num_nodes();

    let mut model = Model::init(&spec, &ctx, rng::derive_seed(seed, "gradcheck-model", &[]))?;
    let batch_size = 4;

    // redraw until every pre-activation clears the ReLU kink by a margin
    let mut samples = Vec::new();
    let mut attempt = 0u64;
    loop {
        samples.clear();
        let mut data_rng = rng::stream(seed, "gradcheck-data", &[attempt]);
        for _ in 0..batch_size {
            let x = GraphSignal::new(Array2::from_shape_fn((n, 1), |_| {
                data_rng.random_range(-1.0..1.0)
            }))
            .expect("finite by construction");
            let label = data_rng.random_range(1..=3usize);
            samples.push((x, label));
        }
        if kink_margin(&model, &ctx, &samples)? > 1e-4 {
            break;
        }
        attempt += 1;
        if attempt > 50 {
            return Err(Error::numeric(
                "could not find a kink-free sample batch for the gradient check",
                0.0,
            ));
        }
    }
    let batch: Vec<(&GraphSignal, usize)> = samples.iter().map(|(x, l)| (x, *l)).collect();

    let (_, analytic, _) = model.batch_loss_grads(&ctx, &batch)?;
    let total = model.num_params();
    let filter_params = total - model_readout_len(&model);
    let picks = pick_indices(seed, filter_params, total, min_params);

    let mut params = model.params_flat();
    let mut max_rel = 0.0f64;
    for &ix in &picks {
        let saved = params[ix];
        params[ix] = saved + FD_STEP;
        model.set_params_flat(&params)?;
        let up = batch_loss(&model, &ctx, &batch)?;
        params[ix] = saved - FD_STEP;
        model.set_params_flat(&params)?;
        let down = batch_loss(&model, &ctx, &batch)?;
        params[ix] = saved;
        model.set_params_flat(&params)?;
        let fd = (up - down) / (2.0 * FD_STEP);
        let denom = analytic[ix].abs().max(fd.abs()).max(DENOM_FLOOR);
        max_rel = max_rel.max((analytic[ix] - fd).abs() / denom);
    }

    Ok(FamilyGradReport {
        family: family_static_name(family),
        params_checked: picks.len(),
        max_rel_error: max_rel,
    })
}

fn family_static_name(family: &FamilySpec) -> &'static str {
    match family {
        FamilySpec::Polynomial { .. } => "polynomial",
        FamilySpec::Spectral { .. } => "spectral",
        FamilySpec::NodeVariant { .. } => "node-variant",
        FamilySpec::EdgeVariant { .. } => "edge-variant",
        FamilySpec::HybridEv { .. } => "hybrid-ev",
        FamilySpec::SpectralEv { .. } => "spectral-ev",
    }
}

fn connected_test_graph(seed: u64) -> Result<crate::graph::Graph> {
    for attempt in 0..100 {
        let g = build_sbm(
            10,
            2,
            0.9,
            0.4,
            rng::derive_seed(seed, "gradcheck-graph", &[attempt]),
        )?;
        if g.is_connected() {
            return g.normalize_by_spectral_radius();
        }
    }
    Err(Error::ExperimentFailure(
        "no connected test graph within 100 attempts".to_string(),
    ))
}

fn model_readout_len(model: &Model) -> usize {
    model
        .param_layout()
        .iter()
        .filter(|(name, _)| name.starts_with("readout"))
        .map(|(_, len)| len)
        .sum()
}

/// At least `min_params` distinct indices: filter blocks first, then a few
/// readout entries for end-to-end coverage.
fn pick_indices(seed: u64, filter_params: usize, total: usize, min_params: usize) -> Vec<usize> {
    let mut rng = rng::stream(seed, "gradcheck-picks", &[]);
    let from_filters = min_params.min(filter_params);
    let mut picks = sample_distinct(&mut rng, 0..filter_params, from_filters);
    let extra = (min_params + 4)
        .saturating_sub(picks.len())
        .min(total - filter_params);
    picks.extend(sample_distinct(&mut rng, filter_params..total, extra));
    picks
}

fn sample_distinct(rng: &mut impl Rng, range: std::ops::Range<usize>, count: usize) -> Vec<usize> {
    let size = range.end - range.start;
    if count >= size {
        return range.collect();
    }
    let mut chosen = std::collections::BTreeSet::new();
    while chosen.len() < count {
        chosen.insert(range.start + rng.random_range(0..size));
    }
    chosen.into_iter().collect()
}

fn batch_loss(model: &Model, ctx: &GraphContext, batch: &[(&GraphSignal, usize)]) -> Result<f64> {
    let mut sum = 0.0;
    for &(x, label) in batch {
        let probs = model.forward(ctx, x)?;
        sum += cross_entropy(&probs, label)?;
    }
    Ok(sum / batch.len() as f64)
}

/// Smallest |pre-activation| across the batch.
fn kink_margin(
    model: &Model,
    ctx: &GraphContext,
    samples: &[(GraphSignal, usize)],
) -> Result<f64> {
    let mut margin = f64::INFINITY;
    for (x, _) in samples {
        margin = margin.min(model.min_abs_preactivation(ctx, x)?);
    }
    Ok(margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_families_pass_at_the_default_tolerance() {
        let mut families = default_families();
        families.push(FamilySpec::SpectralEv { order: 2 });
        for family in &families {
            let report = check_family(family, 123, 20).unwrap();
            assert!(report.params_checked >= 20, "{}", report.family);
            assert!(
                report.max_rel_error < 1e-5,
                "{}: {}",
                report.family,
                report.max_rel_error
            );
        }
    }

    #[test]
    fn reports_are_deterministic_for_one_seed() {
        let a = check_family(&FamilySpec::Polynomial { order: 3 }, 7, 20).unwrap();
        let b = check_family(&FamilySpec::Polynomial { order: 3 }, 7, 20).unwrap();
        assert_eq!(a.max_rel_error.to_bits(), b.max_rel_error.to_bits());
    }
}
