//! Polynomial graph filters: y = sum_k phi_k S^k x.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signal::GraphSignal;

use super::{check_signal_dims, check_upstream_dims, FilterCache};

/// Taps phi_0..phi_K of a shift-invariant polynomial filter.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyParams {
    taps: Vec<f64>,
}

impl PolyParams {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("a polynomial filter needs at least one tap"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("polynomial taps must be finite"));
        }
        Ok(Self { taps })
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            taps: vec![0.0; order + 1],
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.taps.len()
    }

    /// Evaluates sum_k phi_k S^k x through the state recursion
    /// w^(k) = S w^(k-1); cost O(K (M + N) F).
    pub fn forward(&self, g: &Graph, x: &GraphSignal) -> Result<GraphSignal> {
        Ok(self.forward_with_cache(g, x)?.0)
    }

    pub(crate) fn forward_with_cache(
        &self,
        g: &Graph,
        x: &GraphSignal,
    ) -> Result<(GraphSignal, FilterCache)> {
        check_signal_dims(g.num_nodes(), x)?;
        let mut states = Vec::with_capacity(self.taps.len());
        states.push(x.values().clone());
        let mut y = x.values() * self.taps[0];
        for &tap in &self.taps[1..] {
            let next = g.shift().apply(states.last().expect("nonempty"));
            y.scaled_add(tap, &next);
            states.push(next);
        }
        Ok((GraphSignal::from_matrix(y), FilterCache { states }))
    }

    pub(crate) fn backward(
        &self,
        g: &Graph,
        cache: &FilterCache,
        upstream: &GraphSignal,
        need_input_grad: bool,
    ) -> Result<(Vec<f64>, Option<GraphSignal>)> {
        check_upstream_dims(&cache.states[0], upstream)?;
        let grads = cache
            .states
            .iter()
            .map(|w| (upstream.values() * w).sum())
            .collect();
        let input = if need_input_grad {
            // sum_k phi_k (S^T)^k g, accumulated alongside the adjoint states
            let mut adj = upstream.values().clone();
            let mut acc = upstream.values() * self.taps[0];
            for &tap in &self.taps[1..] {
                adj = g.shift().apply_transpose(&adj);
                acc.scaled_add(tap, &adj);
            }
            Some(GraphSignal::from_matrix(acc))
        } else {
            None
        };
        Ok((grads, input))
    }

    pub(crate) fn append_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.taps);
    }

    pub(crate) fn read_params(&mut self, chunk: &[f64]) {
        self.taps.copy_from_slice(chunk);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eigendecompose;

    fn p3() -> Graph {
        Graph::undirected_adjacency(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn degree_zero_scales_the_input() {
        let g = p3();
        let p = PolyParams::new(vec![2.5]).unwrap();
        let x = GraphSignal::from_column(vec![1.0, -2.0, 0.5]).unwrap();
        let y = p.forward(&g, &x).unwrap();
        assert_eq!(y.values().column(0).to_vec(), vec![2.5, -5.0, 1.25]);
    }

    #[test]
    fn order_one_on_a_path() {
        let g = p3();
        let p = PolyParams::new(vec![1.0, 1.0]).unwrap();
        let x = GraphSignal::delta(3, 0).unwrap();
        let y = p.forward(&g, &x).unwrap();
        assert_eq!(y.values().column(0).to_vec(), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn matches_spectral_transfer_function() {
        // Vertex-domain output equals U (sum_k phi_k Lambda^k) U^T x.
        use rand::Rng;
        let mut rng = crate::rng::stream(17, "poly-spectral", &[]);
        for _ in 0..20 {
            let mut edges = Vec::new();
            let n = 8;
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < 0.5 {
                        edges.push((i, j));
                    }
                }
            }
            let g = Graph::undirected_adjacency(n, &edges).unwrap();
            let sp = eigendecompose(&g).unwrap();
            let taps: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = PolyParams::new(taps.clone()).unwrap();
            let x = GraphSignal::new(ndarray::Array2::from_shape_fn((n, 2), |_| {
                rng.random_range(-1.0..1.0)
            }))
            .unwrap();
            let vertex = p.forward(&g, &x).unwrap();

            let x_hat = sp.gft(&x).unwrap();
            let mut y_hat = x_hat.values().clone();
            for (row, &lambda) in sp.eigenvalues().iter().enumerate() {
                let h: f64 = taps
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| t * lambda.powi(k as i32))
                    .sum();
                for c in 0..y_hat.ncols() {
                    y_hat[(row, c)] *= h;
                }
            }
            let spectral = sp.igft(&GraphSignal::from_matrix(y_hat)).unwrap();
            assert!(vertex.max_abs_diff(&spectral) < 1e-8);
        }
    }

    #[test]
    fn tap_gradient_is_the_state_correlation() {
        // d/dphi_1 <g, y> = <g, S x>
        let g = p3();
        let p = PolyParams::new(vec![0.3, -0.7]).unwrap();
        let x = GraphSignal::from_column(vec![1.0, 2.0, -1.0]).unwrap();
        let upstream = GraphSignal::from_column(vec![0.5, 1.0, 2.0]).unwrap();
        let (_, cache) = p.forward_with_cache(&g, &x).unwrap();
        let (grads, input) = p.backward(&g, &cache, &upstream, true).unwrap();
        let sx = g.shift_apply(&x).unwrap();
        let expect: f64 = (upstream.values() * sx.values()).sum();
        assert!((grads[1] - expect).abs() < 1e-14);
        // zero upstream zeroes everything
        let zero = GraphSignal::zeros(3, 1);
        let (grads0, input0) = p.backward(&g, &cache, &zero, true).unwrap();
        assert!(grads0.iter().all(|&v| v == 0.0));
        assert_eq!(input0.unwrap().max_abs(), 0.0);
        assert!(input.is_some());
    }
}
