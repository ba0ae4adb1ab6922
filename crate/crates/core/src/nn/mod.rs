//! Layered graph-filter models, losses, and the training loop.

mod adam;
mod dataset;
mod model;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dataset::{Dataset, Split};
pub use model::{GraphContext, Model};
pub(crate) use model::{assemble_model, make_layer};
pub use train::{cross_entropy, evaluate, softmax, train, write_trace_csv, EpochStats};

use crate::error::{Error, Result};
use crate::filters::SelectionStrategy;

/// Point-wise nonlinearity applied after the filter-bank summation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    None,
}

impl Activation {
    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::None => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "none" => Ok(Activation::None),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }

    pub(crate) fn apply(&self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::None => v,
        }
    }

    /// Derivative at the pre-activation value; 0 at the ReLU kink.
    pub(crate) fn derivative(&self, v: f64) -> f64 {
        match self {
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::None => 1.0,
        }
    }
}

/// Filter family plus its hyperparameters for one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilySpec {
    Polynomial {
        order: usize,
    },
    Spectral {
        num_knots: usize,
    },
    NodeVariant {
        order: usize,
        size: usize,
        strategy: SelectionStrategy,
    },
    EdgeVariant {
        order: usize,
        self_loops: bool,
    },
    HybridEv {
        order: usize,
        size: usize,
        strategy: SelectionStrategy,
    },
    SpectralEv {
        order: usize,
    },
}

impl FamilySpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            FamilySpec::Polynomial { .. } => "polynomial",
            FamilySpec::Spectral { .. } => "spectral",
            FamilySpec::NodeVariant { .. } => "node-variant",
            FamilySpec::EdgeVariant { .. } => "edge-variant",
            FamilySpec::HybridEv { .. } => "hybrid-ev",
            FamilySpec::SpectralEv { .. } => "spectral-ev",
        }
    }

    pub fn needs_spectrum(&self) -> bool {
        matches!(
            self,
            FamilySpec::Spectral { .. } | FamilySpec::SpectralEv { .. }
        )
    }

    pub fn needs_basis(&self) -> bool {
        matches!(self, FamilySpec::SpectralEv { .. })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            FamilySpec::Polynomial { .. } => Ok(()),
            FamilySpec::Spectral { num_knots } => {
                if num_knots < 2 {
                    Err(Error::invalid("spectral layers need at least two knots"))
                } else {
                    Ok(())
                }
            }
            FamilySpec::NodeVariant { size, .. } | FamilySpec::HybridEv { size, .. } => {
                if size == 0 {
                    Err(Error::invalid("the privileged set must be non-empty"))
                } else {
                    Ok(())
                }
            }
            FamilySpec::EdgeVariant { order, .. } | FamilySpec::SpectralEv { order } => {
                if order == 0 {
                    Err(Error::invalid(format!(
                        "{} layers need order K >= 1",
                        self.family_name()
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// One graph-filter layer: an F_in -> F_out bank plus a nonlinearity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_features: usize,
    pub out_features: usize,
    pub family: FamilySpec,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.in_features == 0 || self.out_features == 0 {
            return Err(Error::invalid("layer feature counts must be positive"));
        }
        self.family.validate()
    }
}

/// A full architecture: filter layers followed by a dense softmax readout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub layers: Vec<LayerSpec>,
    pub num_classes: usize,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("a model needs at least one filter layer"));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("classification needs at least two classes"));
        }
        for spec in &self.layers {
            spec.validate()?;
        }
        for pair in self.layers.windows(2) {
            if pair[0].out_features != pair[1].in_features {
                return Err(Error::invalid(format!(
                    "layer feature counts do not chain: {} out vs {} in",
                    pair[0].out_features, pair[1].in_features
                )));
            }
        }
        Ok(())
    }

    pub fn needs_spectrum(&self) -> bool {
        self.layers.iter().any(|l| l.family.needs_spectrum())
    }

    pub fn needs_basis(&self) -> bool {
        self.layers.iter().any(|l| l.family.needs_basis())
    }
}
