//! Loss, training loop, and evaluation.

use std::io::Write;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

use super::model::argmax_lowest;
use super::{AdamConfig, AdamState, Dataset, GraphContext, Model, Split};

pub(crate) const PROB_EPS: f64 = 1e-12;

/// Numerically stable softmax (max subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy against a 1-based class label: -ln(p_label + 1e-12).
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    if label == 0 || label > probs.len() {
        return Err(Error::invalid(format!(
            "label {label} out of range 1..={}",
            probs.len()
        )));
    }
    Ok(-(probs[label - 1] + PROB_EPS).ln())
}

/// Per-epoch training diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
}

/// Trains `model` in place with shuffled mini-batches and ADAM steps.
///
/// One permutation is drawn per epoch from a dedicated substream of the
/// run seed; the final short batch is kept. Returns the per-epoch trace;
/// training loss and accuracy are measured on the forward passes used for
/// the updates.
pub fn train(
    model: &mut Model,
    ctx: &GraphContext,
    data: &Dataset,
    cfg: &AdamConfig,
) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    let train_idx = data.indices(Split::Train);
    if train_idx.is_empty() {
        return Err(Error::invalid("the training split is empty"));
    }
    let has_val = data.split_len(Split::Val) > 0;
    let mut shuffle_rng = rng::stream(cfg.seed, "epoch-shuffle", &[]);
    let mut state = AdamState::new(model.num_params());
    let mut trace = Vec::with_capacity(cfg.epochs);
    let layout = model.param_layout();

    for epoch in 1..=cfg.epochs {
        let mut order = train_idx.clone();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<_> = chunk.iter().map(|&i| data.sample(i)).collect();
            let (mean_loss, grads, batch_correct) = model.batch_loss_grads(ctx, &batch)?;
            loss_sum += mean_loss * batch.len() as f64;
            correct += batch_correct;
            let mut params = model.params_flat();
            adam_step_named(&mut params, &grads, &mut state, cfg, &layout)?;
            model.set_params_flat(&params)?;
        }
        let n = order.len() as f64;
        let val_accuracy = if has_val {
            Some(evaluate(model, ctx, data, Split::Val)?)
        } else {
            None
        };
        trace.push(EpochStats {
            epoch,
            mean_train_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
            val_accuracy,
        });
    }
    Ok(trace)
}

fn adam_step_named(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
    layout: &[(String, usize)],
) -> Result<()> {
    match super::adam_step(params, grads, state, cfg) {
        Err(Error::NumericFailure { context, residual }) => {
            // map the flat index back to its parameter block
            let index: Option<usize> = context
                .split(|c: char| !c.is_ascii_digit())
                .find(|s| !s.is_empty())
                .and_then(|s| s.parse().ok());
            let block = index.and_then(|ix| {
                let mut offset = 0;
                for (name, len) in layout {
                    if ix < offset + len {
                        return Some(name.clone());
                    }
                    offset += len;
                }
                None
            });
            Err(Error::NumericFailure {
                context: match block {
                    Some(name) => format!("{context} (parameter block {name})"),
                    None => context,
                },
                residual,
            })
        }
        other => other,
    }
}

/// Argmax classification accuracy over one split; ties break to the lowest
/// class index.
pub fn evaluate(model: &Model, ctx: &GraphContext, data: &Dataset, split: Split) -> Result<f64> {
    let indices = data.indices(split);
    if indices.is_empty() {
        return Err(Error::invalid(format!("the {} split is empty", split.name())));
    }
    let mut correct = 0usize;
    for i in indices.iter() {
        let (signal, label) = data.sample(*i);
        let probs = model.forward(ctx, signal)?;
        if argmax_lowest(&probs) + 1 == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}

/// CSV trace: epoch, mean_train_loss, train_accuracy, val_accuracy
/// (the last column stays empty without a validation split).
pub fn write_trace_csv<W: Write>(trace: &[EpochStats], mut w: W) -> Result<()> {
    writeln!(w, "epoch,mean_train_loss,train_accuracy,val_accuracy")?;
    for row in trace {
        let val = row
            .val_accuracy
            .map(|v| v.to_string())
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{}",
            row.epoch, row.mean_train_loss, row.train_accuracy, val
        )?;
    }
    Ok(())
}
