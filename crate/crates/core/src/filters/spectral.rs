//! Spectral-kernel filters: y = U diag(B b) Uᵀ x with a prefixed kernel B.

use ndarray::Array2;

use crate::eigen::Spectrum;
use crate::error::{Error, Result};
use crate::signal::GraphSignal;
use crate::svd;

use super::{check_signal_dims, check_upstream_dims, FilterCache};

/// A prefixed N x b kernel and its b learnable weights.
#[derive(Debug, Clone)]
pub struct SpectralParams {
    kernel: Array2<f64>,
    weights: Vec<f64>,
}

impl SpectralParams {
    pub fn new(kernel: Array2<f64>, weights: Vec<f64>) -> Result<Self> {
        let (n, b) = kernel.dim();
        if weights.len() != b {
            return Err(Error::invalid(format!(
                "{} weights do not match a kernel with {b} columns",
                weights.len()
            )));
        }
        if b == 0 || b > n {
            return Err(Error::invalid(format!(
                "kernel needs 1 <= b <= N columns, got b = {b}, N = {n}"
            )));
        }
        if kernel.iter().any(|v| !v.is_finite()) || weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("spectral parameters must be finite"));
        }
        let sigma_min = svd::min_singular_value(&kernel)?;
        if sigma_min <= 1e-10 {
            return Err(Error::invalid(format!(
                "kernel columns are not linearly independent (min singular value {sigma_min:e})"
            )));
        }
        Ok(Self { kernel, weights })
    }

    pub fn kernel(&self) -> &Array2<f64> {
        &self.kernel
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_knots(&self) -> usize {
        self.weights.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.len()
    }

    /// The filter response B b, one value per graph frequency.
    pub fn response(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.kernel.nrows()];
        for (n, hv) in h.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, &w) in self.weights.iter().enumerate() {
                s += self.kernel[(n, j)] * w;
            }
            *hv = s;
        }
        h
    }

    /// y = U diag(B b) Uᵀ x; cost O(N² F) for the two dense transforms.
    pub fn forward(&self, sp: &Spectrum, x: &GraphSignal) -> Result<GraphSignal> {
        Ok(self.forward_with_cache(sp, x)?.0)
    }

    pub(crate) fn forward_with_cache(
        &self,
        sp: &Spectrum,
        x: &GraphSignal,
    ) -> Result<(GraphSignal, FilterCache)> {
        check_signal_dims(sp.num_nodes(), x)?;
        if self.kernel.nrows() != sp.num_nodes() {
            return Err(Error::invalid(
                "kernel row count does not match the spectrum",
            ));
        }
        let x_hat = sp.gft(x)?.into_values();
        let h = self.response();
        let mut y_hat = x_hat.clone();
        for (row, &hv) in h.iter().enumerate() {
            for c in 0..y_hat.ncols() {
                y_hat[(row, c)] *= hv;
            }
        }
        let y = sp.igft(&GraphSignal::from_matrix(y_hat))?;
        Ok((
            y,
            FilterCache {
                states: vec![x_hat],
            },
        ))
    }

    pub(crate) fn backward(
        &self,
        sp: &Spectrum,
        cache: &FilterCache,
        upstream: &GraphSignal,
        need_input_grad: bool,
    ) -> Result<(Vec<f64>, Option<GraphSignal>)> {
        check_upstream_dims(&cache.states[0], upstream)?;
        let x_hat = &cache.states[0];
        let g_hat = sp.gft(upstream)?.into_values();
        // d<g, y>/dh_n = sum_f g_hat[n, f] x_hat[n, f], then chain into b.
        let n = sp.num_nodes();
        let mut dh = vec![0.0; n];
        for (row, d) in dh.iter_mut().enumerate() {
            let mut s = 0.0;
            for c in 0..x_hat.ncols() {
                s += g_hat[(row, c)] * x_hat[(row, c)];
            }
            *d = s;
        }
        let grads = (0..self.weights.len())
            .map(|j| (0..n).map(|row| self.kernel[(row, j)] * dh[row]).sum())
            .collect();
        let input = if need_input_grad {
            // the operator is symmetric: dx = U diag(h) Uᵀ g
            let h = self.response();
            let mut filtered = g_hat;
            for (row, &hv) in h.iter().enumerate() {
                for c in 0..filtered.ncols() {
                    filtered[(row, c)] *= hv;
                }
            }
            Some(sp.igft(&GraphSignal::from_matrix(filtered))?)
        } else {
            None
        };
        Ok((grads, input))
    }

    pub(crate) fn append_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.weights);
    }

    pub(crate) fn read_params(&mut self, chunk: &[f64]) {
        self.weights.copy_from_slice(chunk);
    }
}

/// Cubic B-spline kernel evaluated at the graph frequencies.
///
/// Builds `num_knots` basis functions of degree min(3, num_knots - 1) on a
/// clamped knot vector spanning [lambda_min, lambda_max] with uniformly
/// spaced interior knots, and evaluates each at every eigenvalue. Rows sum
/// to one (partition of unity); with two knots the basis degenerates to the
/// affine hat pair.
pub fn cubic_spline_kernel(eigenvalues: &[f64], num_knots: usize) -> Result<Array2<f64>> {
    if num_knots < 2 {
        return Err(Error::invalid("a spline kernel needs at least two knots"));
    }
    if eigenvalues.is_empty() || eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("eigenvalues must be finite and non-empty"));
    }
    let lo = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span <= f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
        return Err(Error::invalid(
            "all eigenvalues are equal: the spline span is degenerate",
        ));
    }

    let degree = 3.min(num_knots - 1);
    // clamped vector: degree+1 copies at each end, uniform interior knots
    let interior = num_knots - degree - 1;
    let mut knots = Vec::with_capacity(num_knots + degree + 1);
    for _ in 0..=degree {
        knots.push(lo);
    }
    for j in 1..=interior {
        knots.push(lo + span * j as f64 / (interior + 1) as f64);
    }
    for _ in 0..=degree {
        knots.push(hi);
    }

    let mut kernel = Array2::zeros((eigenvalues.len(), num_knots));
    for (row, &lambda) in eigenvalues.iter().enumerate() {
        let (span_idx, basis) = bspline_basis(&knots, degree, num_knots, lambda);
        for (offset, &value) in basis.iter().enumerate() {
            kernel[(row, span_idx - degree + offset)] = value;
        }
    }
    Ok(kernel)
}

/// Nonzero B-spline basis values at `t`: returns the knot span index and the
/// degree+1 values N_{span-degree..span} (Cox-de Boor recursion).
fn bspline_basis(knots: &[f64], degree: usize, num_basis: usize, t: f64) -> (usize, Vec<f64>) {
    let t = t.clamp(knots[degree], knots[num_basis]);
    // locate the span [knots[i], knots[i+1]) containing t; the right
    // endpoint belongs to the last nonempty span
    let mut span = num_basis - 1;
    if t < knots[num_basis] {
        span = degree;
        while span < num_basis - 1 && t >= knots[span + 1] {
            span += 1;
        }
    }
    let mut basis = vec![0.0; degree + 1];
    basis[0] = 1.0;
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    for j in 1..=degree {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { basis[r] / denom };
            basis[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        basis[j] = saved;
    }
    (span, basis)
}
