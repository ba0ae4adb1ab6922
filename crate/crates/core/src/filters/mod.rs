//! Graph-filter families as parameterized linear operators.
//!
//! Every family implements the same surface: a forward evaluation, a
//! reverse-mode backward pass returning exact gradients for each learnable
//! scalar plus (optionally) the input gradient, and a flat parameter layout
//! used by the trainer and the archives.
//!
//! Flat layouts per family (gradients use the same order):
//! - polynomial: taps phi_0..phi_K
//! - edge-variant: for k = 1..K, stored values of the k-th coefficient
//!   matrix in compressed-row order
//! - spectral: the b kernel weights
//! - node-variant: taps row-major, shift order k major, privileged node minor
//! - hybrid edge-variant: global taps, then the privileged diagonal, then
//!   the K edge matrices in compressed-row order
//! - spectral edge-variant: expansion coefficients mu^(1)..mu^(K)

mod ev;
mod hev;
mod nv;
mod poly;
mod privileged;
mod spectral;
mod spectral_ev;

pub use ev::{ev_support, EVParams};
pub use hev::{privileged_support, HEVParams};
pub use nv::NVParams;
pub use poly::PolyParams;
pub use privileged::{select_privileged, PrivilegedSet, SelectionStrategy};
pub use spectral::{cubic_spline_kernel, SpectralParams};
pub use spectral_ev::{spectral_ev_basis, SpectralEvParams, SpectralEVBasis};

use ndarray::Array2;

use crate::eigen::Spectrum;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signal::GraphSignal;

/// Everything a filter may need from its graph at evaluation time.
#[derive(Clone, Copy)]
pub struct FilterContext<'a> {
    pub graph: &'a Graph,
    pub spectrum: Option<&'a Spectrum>,
    pub basis: Option<&'a SpectralEVBasis>,
}

impl<'a> FilterContext<'a> {
    pub fn new(graph: &'a Graph) -> Self {
        Self {
            graph,
            spectrum: None,
            basis: None,
        }
    }

    pub fn with_spectrum(graph: &'a Graph, spectrum: &'a Spectrum) -> Self {
        Self {
            graph,
            spectrum: Some(spectrum),
            basis: None,
        }
    }

    fn require_spectrum(&self) -> Result<&'a Spectrum> {
        self.spectrum.ok_or_else(|| {
            Error::invalid("this filter family needs an eigendecomposition of the shift operator")
        })
    }

    fn require_basis(&self) -> Result<&'a SpectralEVBasis> {
        self.basis
            .ok_or_else(|| Error::invalid("this filter family needs a spectral edge-variant basis"))
    }
}

/// Intermediate states saved by a forward pass for the matching backward.
#[derive(Debug, Clone)]
pub struct FilterCache {
    pub(crate) states: Vec<Array2<f64>>,
}

/// One SISO filter of any family.
#[derive(Debug, Clone)]
pub enum FilterParams {
    Polynomial(PolyParams),
    EdgeVariant(EVParams),
    Spectral(SpectralParams),
    NodeVariant(NVParams),
    HybridEv(HEVParams),
    SpectralEv(SpectralEvParams),
}

impl FilterParams {
    pub fn family_name(&self) -> &'static str {
        match self {
            FilterParams::Polynomial(_) => "polynomial",
            FilterParams::EdgeVariant(_) => "edge-variant",
            FilterParams::Spectral(_) => "spectral",
            FilterParams::NodeVariant(_) => "node-variant",
            FilterParams::HybridEv(_) => "hybrid-ev",
            FilterParams::SpectralEv(_) => "spectral-ev",
        }
    }

    pub fn forward(&self, ctx: &FilterContext, x: &GraphSignal) -> Result<GraphSignal> {
        Ok(self.forward_with_cache(ctx, x)?.0)
    }

    pub fn forward_with_cache(
        &self,
        ctx: &FilterContext,
        x: &GraphSignal,
    ) -> Result<(GraphSignal, FilterCache)> {
        match self {
            FilterParams::Polynomial(p) => p.forward_with_cache(ctx.graph, x),
            FilterParams::EdgeVariant(p) => p.forward_with_cache(x),
            FilterParams::Spectral(p) => p.forward_with_cache(ctx.require_spectrum()?, x),
            FilterParams::NodeVariant(p) => p.forward_with_cache(ctx.graph, x),
            FilterParams::HybridEv(p) => p.forward_with_cache(ctx.graph, x),
            FilterParams::SpectralEv(p) => {
                p.forward_with_cache(ctx.require_basis()?, ctx.require_spectrum()?, x)
            }
        }
    }

    /// Gradients of `sum(upstream .* forward(x))` with respect to the
    /// parameters (flat layout) and, when requested, the input signal.
    pub fn backward(
        &self,
        ctx: &FilterContext,
        x: &GraphSignal,
        cache: &FilterCache,
        upstream: &GraphSignal,
        need_input_grad: bool,
    ) -> Result<(Vec<f64>, Option<GraphSignal>)> {
        match self {
            FilterParams::Polynomial(p) => p.backward(ctx.graph, cache, upstream, need_input_grad),
            FilterParams::EdgeVariant(p) => p.backward(cache, upstream, need_input_grad),
            FilterParams::Spectral(p) => {
                p.backward(ctx.require_spectrum()?, cache, upstream, need_input_grad)
            }
            FilterParams::NodeVariant(p) => {
                p.backward(ctx.graph, cache, upstream, need_input_grad)
            }
            FilterParams::HybridEv(p) => {
                p.backward(ctx.graph, x, cache, upstream, need_input_grad)
            }
            FilterParams::SpectralEv(p) => p.backward(
                ctx.require_basis()?,
                ctx.require_spectrum()?,
                cache,
                upstream,
                need_input_grad,
            ),
        }
    }

    /// Learnable scalars in one SISO filter of this family.
    pub fn num_params(&self) -> usize {
        match self {
            FilterParams::Polynomial(p) => p.num_params(),
            FilterParams::EdgeVariant(p) => p.num_params(),
            FilterParams::Spectral(p) => p.num_params(),
            FilterParams::NodeVariant(p) => p.num_params(),
            FilterParams::HybridEv(p) => p.num_params(),
            FilterParams::SpectralEv(p) => p.num_params(),
        }
    }

    /// Learnable scalars in an F_in -> F_out bank of this family.
    pub fn bank_param_count(&self, in_features: usize, out_features: usize) -> usize {
        self.num_params() * in_features * out_features
    }

    pub fn append_params(&self, out: &mut Vec<f64>) {
        match self {
            FilterParams::Polynomial(p) => p.append_params(out),
            FilterParams::EdgeVariant(p) => p.append_params(out),
            FilterParams::Spectral(p) => p.append_params(out),
            FilterParams::NodeVariant(p) => p.append_params(out),
            FilterParams::HybridEv(p) => p.append_params(out),
            FilterParams::SpectralEv(p) => p.append_params(out),
        }
    }

    /// Overwrites the parameters from a flat chunk of length `num_params`.
    pub fn read_params(&mut self, chunk: &[f64]) -> Result<()> {
        if chunk.len() != self.num_params() {
            return Err(Error::invalid(format!(
                "parameter chunk of {} values does not fit a {} filter with {} scalars",
                chunk.len(),
                self.family_name(),
                self.num_params()
            )));
        }
        if chunk.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("filter parameters must be finite"));
        }
        match self {
            FilterParams::Polynomial(p) => p.read_params(chunk),
            FilterParams::EdgeVariant(p) => p.read_params(chunk),
            FilterParams::Spectral(p) => p.read_params(chunk),
            FilterParams::NodeVariant(p) => p.read_params(chunk),
            FilterParams::HybridEv(p) => p.read_params(chunk),
            FilterParams::SpectralEv(p) => p.read_params(chunk),
        }
        Ok(())
    }
}

pub(crate) fn check_signal_dims(n: usize, x: &GraphSignal) -> Result<()> {
    if x.num_nodes() != n {
        return Err(Error::invalid(format!(
            "signal has {} rows but the filter acts on {} nodes",
            x.num_nodes(),
            n
        )));
    }
    Ok(())
}

pub(crate) fn check_upstream_dims(x_like: &Array2<f64>, upstream: &GraphSignal) -> Result<()> {
    if upstream.values().dim() != x_like.dim() {
        return Err(Error::invalid(
            "upstream gradient shape does not match the forward output",
        ));
    }
    Ok(())
}
