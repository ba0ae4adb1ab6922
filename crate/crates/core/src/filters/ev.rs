//! Edge-variant graph filters.
//!
//! An order-K edge-variant filter owns K coefficient matrices sharing the
//! support of S + I (or of S alone when self-loops are disabled). The output
//! is the running sum of the chain states w^(k) = Phi^(k) w^(k-1), so every
//! edge carries its own weight at every iteration.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signal::GraphSignal;
use crate::sparse::{SparseMatrix, SparsityPattern};

use super::{check_signal_dims, check_upstream_dims, FilterCache};
use super::poly::PolyParams;

/// Shared support for edge-variant coefficient matrices on `g`.
pub fn ev_support(g: &Graph, use_self_loops: bool) -> Arc<SparsityPattern> {
    if use_self_loops {
        Arc::clone(g.support_with_diag())
    } else {
        let pairs: Vec<_> = g
            .shift()
            .pattern()
            .iter()
            .filter(|&(i, j)| i != j)
            .collect();
        Arc::new(
            SparsityPattern::from_pairs(g.num_nodes(), pairs).expect("indices already validated"),
        )
    }
}

#[derive(Debug, Clone)]
pub struct EVParams {
    coeffs: Vec<SparseMatrix>,
    use_self_loops: bool,
}

impl EVParams {
    pub fn new(coeffs: Vec<SparseMatrix>, use_self_loops: bool) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("an edge-variant filter needs order K >= 1"));
        }
        let first = coeffs[0].pattern();
        for c in &coeffs[1..] {
            let same = Arc::ptr_eq(c.pattern(), first) || c.pattern() == first;
            if !same {
                return Err(Error::invalid(
                    "edge-variant coefficient matrices must share one support structure",
                ));
            }
        }
        Ok(Self {
            coeffs,
            use_self_loops,
        })
    }

    pub fn zeros(g: &Graph, order: usize, use_self_loops: bool) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("an edge-variant filter needs order K >= 1"));
        }
        let pattern = ev_support(g, use_self_loops);
        let coeffs = (0..order)
            .map(|_| SparseMatrix::zeros(Arc::clone(&pattern)))
            .collect();
        Self::new(coeffs, use_self_loops)
    }

    /// Realizes a polynomial filter as an edge-variant chain.
    ///
    /// Phi^(1) = phi_0 I + phi_1 S and Phi^(k) = (phi_k / phi_{k-1}) S for
    /// k >= 2, which makes the partial products phi_k S^k and the output
    /// match the polynomial exactly. Two tap layouts are unrealizable and
    /// rejected: a nonzero phi_0 with K >= 2 (the k = 2 factor would need
    /// support outside S + I) and a zero tap followed by a nonzero one (the
    /// ratio is undefined).
    pub fn from_poly(p: &PolyParams, g: &Graph) -> Result<EVParams> {
        let order = p.order();
        if order < 1 {
            return Err(Error::invalid(
                "edge-variant realization needs a polynomial of order K >= 1",
            ));
        }
        let taps = p.taps();
        if order >= 2 && taps[0] != 0.0 {
            return Err(Error::invalid(format!(
                "tap phi_0 = {} is unrealizable at k = 2: threading it through the chain \
                 would need support outside S + I (use phi_0 = 0 or order 1)",
                taps[0]
            )));
        }
        let pattern = ev_support(g, true);
        let shift = g.shift();

        let mut first = SparseMatrix::zeros(Arc::clone(&pattern));
        {
            let values = first.values_mut();
            for (idx, (i, j)) in pattern.iter().enumerate() {
                let mut v = taps[1] * shift.value_at(i, j);
                if i == j {
                    v += taps[0];
                }
                values[idx] = v;
            }
        }
        let mut coeffs = vec![first];
        for k in 2..=order {
            if taps[k - 1] == 0.0 {
                if taps[k] != 0.0 {
                    return Err(Error::invalid(format!(
                        "tap ratio phi_{k}/phi_{} is undefined (phi_{} = 0): the order-{k} \
                         factor is unrealizable",
                        k - 1,
                        k - 1
                    )));
                }
                coeffs.push(SparseMatrix::zeros(Arc::clone(&pattern)));
            } else {
                let ratio = taps[k] / taps[k - 1];
                let mut m = SparseMatrix::zeros(Arc::clone(&pattern));
                let values = m.values_mut();
                for (idx, (i, j)) in pattern.iter().enumerate() {
                    values[idx] = ratio * shift.value_at(i, j);
                }
                coeffs.push(m);
            }
        }
        EVParams::new(coeffs, true)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[SparseMatrix] {
        &self.coeffs
    }

    pub fn support(&self) -> &Arc<SparsityPattern> {
        self.coeffs[0].pattern()
    }

    pub fn use_self_loops(&self) -> bool {
        self.use_self_loops
    }

    pub fn num_params(&self) -> usize {
        self.coeffs.len() * self.support().nnz()
    }

    /// y = sum_{k=1..K} Phi^(k:1) x via the running-state recursion;
    /// cost O(K (M + N) F).
    pub fn forward(&self, x: &GraphSignal) -> Result<GraphSignal> {
        Ok(self.forward_with_cache(x)?.0)
    }

    pub(crate) fn forward_with_cache(
        &self,
        x: &GraphSignal,
    ) -> Result<(GraphSignal, FilterCache)> {
        check_signal_dims(self.support().num_rows(), x)?;
        let mut states = Vec::with_capacity(self.coeffs.len() + 1);
        states.push(x.values().clone());
        let mut y = ndarray::Array2::zeros(x.values().dim());
        for coeff in &self.coeffs {
            let next = coeff.apply(states.last().expect("nonempty"));
            y += &next;
            states.push(next);
        }
        Ok((GraphSignal::from_matrix(y), FilterCache { states }))
    }

    pub(crate) fn backward(
        &self,
        cache: &FilterCache,
        upstream: &GraphSignal,
        need_input_grad: bool,
    ) -> Result<(Vec<f64>, Option<GraphSignal>)> {
        check_upstream_dims(&cache.states[0], upstream)?;
        let order = self.coeffs.len();
        let nnz = self.support().nnz();
        let mut grads = vec![0.0; order * nnz];

        // adjoint of w^(k): upstream plus what flows back from w^(k+1)
        let mut adj = upstream.values().clone();
        let mut input_grad = None;
        for k in (0..order).rev() {
            let seg = &mut grads[k * nnz..(k + 1) * nnz];
            let prev_state = &cache.states[k];
            for (idx, (i, j)) in self.support().iter().enumerate() {
                let mut dot = 0.0;
                for c in 0..adj.ncols() {
                    dot += adj[(i, c)] * prev_state[(j, c)];
                }
                seg[idx] = dot;
            }
            if k > 0 {
                adj = self.coeffs[k].apply_transpose(&adj) + upstream.values();
            } else if need_input_grad {
                input_grad = Some(GraphSignal::from_matrix(
                    self.coeffs[0].apply_transpose(&adj),
                ));
            }
        }
        Ok((grads, input_grad))
    }

    pub(crate) fn append_params(&self, out: &mut Vec<f64>) {
        for c in &self.coeffs {
            out.extend_from_slice(c.values());
        }
    }

    pub(crate) fn read_params(&mut self, chunk: &[f64]) {
        let nnz = self.coeffs[0].nnz();
        for (k, c) in self.coeffs.iter_mut().enumerate() {
            c.values_mut().copy_from_slice(&chunk[k * nnz..(k + 1) * nnz]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_coeff(n: usize, pattern: &Arc<SparsityPattern>) -> SparseMatrix {
        let mut m = SparseMatrix::zeros(Arc::clone(pattern));
        let values = m.values_mut();
        for (idx, (i, j)) in pattern.iter().enumerate() {
            values[idx] = if i == j { 1.0 } else { 0.0 };
        }
        let _ = n;
        m
    }

    #[test]
    fn identity_coefficient_passes_the_signal() {
        let g = Graph::undirected_adjacency(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let pattern = ev_support(&g, true);
        let p = EVParams::new(vec![identity_coeff(4, &pattern)], true).unwrap();
        let x = GraphSignal::from_column(vec![1.0, -1.0, 2.0, 0.0]).unwrap();
        let y = p.forward(&x).unwrap();
        assert_eq!(y.max_abs_diff(&x), 0.0);

        let p2 = EVParams::new(
            vec![identity_coeff(4, &pattern), identity_coeff(4, &pattern)],
            true,
        )
        .unwrap();
        let y2 = p2.forward(&x).unwrap();
        let twice = GraphSignal::from_column(vec![2.0, -2.0, 4.0, 0.0]).unwrap();
        assert_eq!(y2.max_abs_diff(&twice), 0.0);
    }

    #[test]
    fn support_counts_match_the_parameterization() {
        let g = Graph::undirected_adjacency(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        // M = 6 directed edges, N = 4
        let with_loops = EVParams::zeros(&g, 3, true).unwrap();
        assert_eq!(with_loops.num_params(), 3 * (6 + 4));
        let without = EVParams::zeros(&g, 3, false).unwrap();
        assert_eq!(without.num_params(), 3 * 6);
    }

    #[test]
    fn mismatched_supports_are_rejected() {
        let g = Graph::undirected_adjacency(3, &[(0, 1), (1, 2)]).unwrap();
        let a = SparseMatrix::zeros(ev_support(&g, true));
        let b = SparseMatrix::zeros(ev_support(&g, false));
        assert!(EVParams::new(vec![a, b], true).is_err());
    }

    #[test]
    fn random_chain_matches_dense_product_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::stream(23, "ev-oracle", &[]);
        let g = Graph::undirected_adjacency(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let pattern = ev_support(&g, true);
        let coeffs: Vec<SparseMatrix> = (0..3)
            .map(|_| {
                let mut m = SparseMatrix::zeros(Arc::clone(&pattern));
                for v in m.values_mut() {
                    *v = rng.random_range(-1.0..1.0);
                }
                m
            })
            .collect();
        let dense: Vec<_> = coeffs.iter().map(|c| c.to_dense()).collect();
        let p = EVParams::new(coeffs, true).unwrap();
        let x = GraphSignal::new(ndarray::Array2::from_shape_fn((4, 2), |_| {
            rng.random_range(-1.0..1.0)
        }))
        .unwrap();
        let y = p.forward(&x).unwrap();

        let mut h: ndarray::Array2<f64> = ndarray::Array2::zeros((4, 4));
        let mut product: ndarray::Array2<f64> = ndarray::Array2::eye(4);
        for d in &dense {
            product = d.dot(&product);
            h += &product;
        }
        let oracle = GraphSignal::from_matrix(h.dot(x.values()));
        assert!(y.max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn poly_realization_pure_shift() {
        let g = Graph::undirected_adjacency(3, &[(0, 1), (1, 2)]).unwrap();
        let p = PolyParams::new(vec![0.0, 1.0]).unwrap();
        let ev = EVParams::from_poly(&p, &g).unwrap();
        let x = GraphSignal::from_column(vec![1.0, 2.0, 3.0]).unwrap();
        let want = p.forward(&g, &x).unwrap();
        let got = ev.forward(&x).unwrap();
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn poly_realization_matches_polynomial_outputs() {
        use rand::Rng;
        let mut rng = crate::rng::stream(29, "ev-from-poly", &[]);
        let g = Graph::undirected_adjacency(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        for order in 1..=4 {
            let mut taps: Vec<f64> = (0..=order).map(|_| rng.random_range(-1.0..1.0)).collect();
            if order >= 2 {
                taps[0] = 0.0;
            }
            let p = PolyParams::new(taps).unwrap();
            let ev = EVParams::from_poly(&p, &g).unwrap();
            let x = GraphSignal::new(ndarray::Array2::from_shape_fn((5, 2), |_| {
                rng.random_range(-1.0..1.0)
            }))
            .unwrap();
            let want = p.forward(&g, &x).unwrap();
            let got = ev.forward(&x).unwrap();
            assert!(got.max_abs_diff(&want) < 1e-10, "order {order}");
        }
    }

    #[test]
    fn poly_realization_rejects_broken_chains() {
        let g = Graph::undirected_adjacency(3, &[(0, 1), (1, 2)]).unwrap();
        // zero tap followed by a nonzero one: ratio undefined at k = 2
        let p = PolyParams::new(vec![0.0, 0.0, 1.0]).unwrap();
        let err = EVParams::from_poly(&p, &g).unwrap_err();
        assert!(err.to_string().contains("phi_2"));
        // nonzero constant tap cannot thread through an order-2 chain
        let p = PolyParams::new(vec![1.0, 0.0, 1.0]).unwrap();
        let err = EVParams::from_poly(&p, &g).unwrap_err();
        assert!(err.to_string().contains("k = 2"));
        // trailing zeros after a dead chain are fine
        let p = PolyParams::new(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let ev = EVParams::from_poly(&p, &g).unwrap();
        let x = GraphSignal::delta(3, 1).unwrap();
        let want = p.forward(&g, &x).unwrap();
        assert!(ev.forward(&x).unwrap().max_abs_diff(&want) < 1e-12);
    }
}
