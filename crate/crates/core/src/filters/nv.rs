//! Node-variant graph filters: y = sum_k diag(C_B phi_B^(k)) S^k x.
//!
//! Each privileged node learns its own tap per shift order; every other node
//! inherits the taps of its assigned privileged node.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signal::GraphSignal;

use super::{check_signal_dims, check_upstream_dims, FilterCache, PrivilegedSet};

#[derive(Debug, Clone)]
pub struct NVParams {
    privileged: PrivilegedSet,
    /// (K+1) x |B| taps; row k holds the order-k taps of the privileged nodes.
    taps: Array2<f64>,
}

impl NVParams {
    pub fn new(privileged: PrivilegedSet, taps: Array2<f64>) -> Result<Self> {
        if taps.nrows() == 0 {
            return Err(Error::invalid("node-variant filters need order K >= 0"));
        }
        if taps.ncols() != privileged.size() {
            return Err(Error::invalid(format!(
                "tap matrix has {} columns but the privileged set has {} nodes",
                taps.ncols(),
                privileged.size()
            )));
        }
        if taps.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("node-variant taps must be finite"));
        }
        Ok(Self { privileged, taps })
    }

    pub fn zeros(privileged: PrivilegedSet, order: usize) -> Self {
        let taps = Array2::zeros((order + 1, privileged.size()));
        Self { privileged, taps }
    }

    pub fn privileged(&self) -> &PrivilegedSet {
        &self.privileged
    }

    pub fn taps(&self) -> &Array2<f64> {
        &self.taps
    }

    pub fn order(&self) -> usize {
        self.taps.nrows() - 1
    }

    pub fn num_params(&self) -> usize {
        self.taps.len()
    }

    /// Per-node gain vector for shift order k.
    fn gains(&self, k: usize) -> Vec<f64> {
        (0..self.privileged.num_nodes())
            .map(|i| self.taps[(k, self.privileged.assigned_index(i))])
            .collect()
    }

    pub fn forward(&self, g: &Graph, x: &GraphSignal) -> Result<GraphSignal> {
        Ok(self.forward_with_cache(g, x)?.0)
    }

    pub(crate) fn forward_with_cache(
        &self,
        g: &Graph,
        x: &GraphSignal,
    ) -> Result<(GraphSignal, FilterCache)> {
        check_signal_dims(g.num_nodes(), x)?;
        if self.privileged.num_nodes() != g.num_nodes() {
            return Err(Error::invalid(
                "privileged assignment does not cover this graph",
            ));
        }
        let order = self.order();
        let mut states = Vec::with_capacity(order + 1);
        states.push(x.values().clone());
        let mut y: Array2<f64> = Array2::zeros(x.values().dim());
        for k in 0..=order {
            if k > 0 {
                let next = g.shift().apply(states.last().expect("nonempty"));
                states.push(next);
            }
            let w = &states[k];
            let gains = self.gains(k);
            for i in 0..w.nrows() {
                let d = gains[i];
                if d != 0.0 {
                    for c in 0..w.ncols() {
                        y[(i, c)] += d * w[(i, c)];
                    }
                }
            }
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
        let order = self.order();
        let size = self.privileged.size();
        let up = upstream.values();
        let mut grads = vec![0.0; (order + 1) * size];
        for (k, w) in cache.states.iter().enumerate() {
            let seg = &mut grads[k * size..(k + 1) * size];
            for i in 0..w.nrows() {
                let m = self.privileged.assigned_index(i);
                let mut dot = 0.0;
                for c in 0..w.ncols() {
                    dot += up[(i, c)] * w[(i, c)];
                }
                seg[m] += dot;
            }
        }
        let input = if need_input_grad {
            // Horner over (S^T)^k applied to the gain-masked upstream
            let masked = |k: usize| -> Array2<f64> {
                let gains = self.gains(k);
                let mut m = up.clone();
                for i in 0..m.nrows() {
                    let d = gains[i];
                    for c in 0..m.ncols() {
                        m[(i, c)] *= d;
                    }
                }
                m
            };
            let mut acc = masked(order);
            for k in (0..order).rev() {
                acc = g.shift().apply_transpose(&acc) + masked(k);
            }
            Some(GraphSignal::from_matrix(acc))
        } else {
            None
        };
        Ok((grads, input))
    }

    pub(crate) fn append_params(&self, out: &mut Vec<f64>) {
        out.extend(self.taps.iter());
    }

    pub(crate) fn read_params(&mut self, chunk: &[f64]) {
        for (dst, &src) in self.taps.iter_mut().zip(chunk) {
            *dst = src;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::poly::PolyParams;

    fn p4() -> Graph {
        Graph::undirected_adjacency(4, &[(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn full_privileged_set_with_tied_taps_is_polynomial() {
        let g = p4();
        let taps = vec![0.3, -1.1, 0.7];
        let poly = PolyParams::new(taps.clone()).unwrap();
        let tied = Array2::from_shape_fn((3, 4), |(k, _)| taps[k]);
        let nv = NVParams::new(PrivilegedSet::full(4), tied).unwrap();
        let x = GraphSignal::from_column(vec![1.0, 0.5, -2.0, 3.0]).unwrap();
        let a = poly.forward(&g, &x).unwrap();
        let b = nv.forward(&g, &x).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn order_zero_is_per_node_gain() {
        let g = p4();
        let gains = Array2::from_shape_vec((1, 4), vec![2.0, -1.0, 0.5, 0.0]).unwrap();
        let nv = NVParams::new(PrivilegedSet::full(4), gains).unwrap();
        let x = GraphSignal::from_column(vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let y = nv.forward(&g, &x).unwrap();
        assert_eq!(y.values().column(0).to_vec(), vec![2.0, -1.0, 0.5, 0.0]);
    }

    #[test]
    fn two_privileged_nodes_match_dense_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::stream(41, "nv-oracle", &[]);
        let g = p4();
        // privileged {0, 3}: nodes 0, 1 -> 0 and 2, 3 -> 3 by hop distance
        let set = PrivilegedSet::new(vec![0, 3], vec![0, 0, 1, 1]).unwrap();
        let taps = Array2::from_shape_fn((3, 2), |_| rng.random_range(-1.0..1.0));
        let nv = NVParams::new(set.clone(), taps.clone()).unwrap();
        let x = GraphSignal::new(Array2::from_shape_fn((4, 2), |_| {
            rng.random_range(-1.0..1.0)
        }))
        .unwrap();
        let y = nv.forward(&g, &x).unwrap();

        let s = g.shift().to_dense();
        let mut h: Array2<f64> = Array2::zeros((4, 4));
        let mut power: Array2<f64> = Array2::eye(4);
        for k in 0..3 {
            if k > 0 {
                power = s.dot(&power);
            }
            let mut diag = Array2::zeros((4, 4));
            for i in 0..4 {
                diag[(i, i)] = taps[(k, set.assigned_index(i))];
            }
            h += &diag.dot(&power);
        }
        let oracle = GraphSignal::from_matrix(h.dot(x.values()));
        assert!(y.max_abs_diff(&oracle) < 1e-12);
    }
}
