//! Hybrid edge-variant filters.
//!
//! Privileged nodes run an edge-variant chain (a diagonal stage followed by
//! K edge stages restricted to their rows) while all nodes share a global
//! polynomial; the output sums both branches:
//! y = sum_{k=0..K} (prod_{kappa<=k} Phi_B^(kappa) + phi_k S^k) x.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signal::GraphSignal;
use crate::sparse::{SparseMatrix, SparsityPattern};

use super::{check_signal_dims, check_upstream_dims, FilterCache, PrivilegedSet};

/// Support for the privileged edge stages: row i keeps N_i plus the
/// diagonal slot when i is privileged, and is empty otherwise.
pub fn privileged_support(g: &Graph, set: &PrivilegedSet) -> Arc<SparsityPattern> {
    let mut pairs = Vec::new();
    for &i in set.nodes() {
        pairs.push((i, i));
        for &j in g.neighborhood(i) {
            pairs.push((i, j));
        }
    }
    Arc::new(
        SparsityPattern::from_pairs(g.num_nodes(), pairs).expect("indices already validated"),
    )
}

#[derive(Debug, Clone)]
pub struct HEVParams {
    privileged: PrivilegedSet,
    support: Arc<SparsityPattern>,
    /// Diagonal stage Phi_B^(0): one value per privileged node.
    diag0: Vec<f64>,
    /// Edge stages Phi_B^(1)..Phi_B^(K) on the privileged-rows support.
    edge: Vec<SparseMatrix>,
    /// Global polynomial taps phi_0..phi_K.
    global_taps: Vec<f64>,
    max_privileged_degree: usize,
}

impl HEVParams {
    pub fn new(
        g: &Graph,
        privileged: PrivilegedSet,
        diag0: Vec<f64>,
        edge: Vec<SparseMatrix>,
        global_taps: Vec<f64>,
    ) -> Result<Self> {
        if privileged.num_nodes() != g.num_nodes() {
            return Err(Error::invalid(
                "privileged assignment does not cover this graph",
            ));
        }
        if diag0.len() != privileged.size() {
            return Err(Error::invalid(
                "diagonal stage needs one value per privileged node",
            ));
        }
        if global_taps.len() != edge.len() + 1 {
            return Err(Error::invalid(
                "global taps must have length K + 1 for K edge stages",
            ));
        }
        let support = privileged_support(g, &privileged);
        for m in &edge {
            let ok = Arc::ptr_eq(m.pattern(), &support) || m.pattern() == &support;
            if !ok {
                return Err(Error::invalid(
                    "edge stages must live on the privileged-rows support",
                ));
            }
        }
        if diag0.iter().chain(global_taps.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("hybrid filter parameters must be finite"));
        }
        let max_privileged_degree = privileged
            .nodes()
            .iter()
            .map(|&i| g.degree(i))
            .max()
            .unwrap_or(0);
        Ok(Self {
            privileged,
            support,
            diag0,
            edge,
            global_taps,
            max_privileged_degree,
        })
    }

    pub fn zeros(g: &Graph, privileged: PrivilegedSet, order: usize) -> Result<Self> {
        let support = privileged_support(g, &privileged);
        let diag0 = vec![0.0; privileged.size()];
        let edge = (0..order)
            .map(|_| SparseMatrix::zeros(Arc::clone(&support)))
            .collect();
        let global_taps = vec![0.0; order + 1];
        Self::new(g, privileged, diag0, edge, global_taps)
    }

    pub fn privileged(&self) -> &PrivilegedSet {
        &self.privileged
    }

    pub fn diag0(&self) -> &[f64] {
        &self.diag0
    }

    pub fn edge_stages(&self) -> &[SparseMatrix] {
        &self.edge
    }

    /// The privileged-rows support shared by every edge stage.
    pub fn support(&self) -> &Arc<SparsityPattern> {
        &self.support
    }

    pub fn global_taps(&self) -> &[f64] {
        &self.global_taps
    }

    pub fn order(&self) -> usize {
        self.edge.len()
    }

    pub fn max_privileged_degree(&self) -> usize {
        self.max_privileged_degree
    }

    fn edge_nnz(&self) -> usize {
        self.support.nnz()
    }

    pub fn num_params(&self) -> usize {
        self.global_taps.len() + self.diag0.len() + self.edge.len() * self.edge_nnz()
    }

    /// Paper bound on the parameter count: (K+1) + |B| + K |B| (N_Bmax + 1).
    pub fn param_count_bound(&self) -> usize {
        let k = self.order();
        let b = self.privileged.size();
        (k + 1) + b + k * b * (self.max_privileged_degree + 1)
    }

    fn apply_diag0(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut e = Array2::zeros(x.dim());
        for (rank, &node) in self.privileged.nodes().iter().enumerate() {
            let d = self.diag0[rank];
            for c in 0..x.ncols() {
                e[(node, c)] = d * x[(node, c)];
            }
        }
        e
    }

    pub fn forward(&self, g: &Graph, x: &GraphSignal) -> Result<GraphSignal> {
        Ok(self.forward_with_cache(g, x)?.0)
    }

    /// Cache layout: states[0..=K] are the shift powers w^(k) = S^k x and
    /// states[K+1..=2K+1] are the chain states e^(k).
    pub(crate) fn forward_with_cache(
        &self,
        g: &Graph,
        x: &GraphSignal,
    ) -> Result<(GraphSignal, FilterCache)> {
        check_signal_dims(g.num_nodes(), x)?;
        let order = self.order();
        let mut states = Vec::with_capacity(2 * order + 2);
        states.push(x.values().clone());
        let mut y = x.values() * self.global_taps[0];
        for &tap in &self.global_taps[1..] {
            let next = g.shift().apply(states.last().expect("nonempty"));
            y.scaled_add(tap, &next);
            states.push(next);
        }
        let mut chain = self.apply_diag0(x.values());
        y += &chain;
        states.push(chain.clone());
        for stage in &self.edge {
            chain = stage.apply(&chain);
            y += &chain;
            states.push(chain.clone());
        }
        Ok((GraphSignal::from_matrix(y), FilterCache { states }))
    }

    pub(crate) fn backward(
        &self,
        g: &Graph,
        x: &GraphSignal,
        cache: &FilterCache,
        upstream: &GraphSignal,
        need_input_grad: bool,
    ) -> Result<(Vec<f64>, Option<GraphSignal>)> {
        check_upstream_dims(&cache.states[0], upstream)?;
        let order = self.order();
        let up = upstream.values();
        let shift_states = &cache.states[..=order];
        let chain_states = &cache.states[order + 1..];

        let mut grads = Vec::with_capacity(self.num_params());
        // global taps: correlations with the shift powers
        for w in shift_states {
            grads.push((up * w).sum());
        }

        // chain adjoints, walked backward while collecting stage gradients
        let nnz = self.edge_nnz();
        let mut edge_grads = vec![0.0; order * nnz];
        let mut adj = up.clone();
        for k in (0..order).rev() {
            let seg = &mut edge_grads[k * nnz..(k + 1) * nnz];
            let prev = &chain_states[k];
            let support = self.edge[k].pattern();
            for (idx, (i, j)) in support.iter().enumerate() {
                let mut dot = 0.0;
                for c in 0..adj.ncols() {
                    dot += adj[(i, c)] * prev[(j, c)];
                }
                seg[idx] = dot;
            }
            adj = self.edge[k].apply_transpose(&adj) + up;
        }
        // diagonal stage gradient and its input contribution
        for (rank, &node) in self.privileged.nodes().iter().enumerate() {
            let mut dot = 0.0;
            for c in 0..adj.ncols() {
                dot += adj[(node, c)] * x.values()[(node, c)];
            }
            grads.push(dot);
            let _ = rank;
        }
        grads.extend_from_slice(&edge_grads);

        let input = if need_input_grad {
            // polynomial branch
            let mut acc = up * self.global_taps[0];
            let mut t = up.clone();
            for &tap in &self.global_taps[1..] {
                t = g.shift().apply_transpose(&t);
                acc.scaled_add(tap, &t);
            }
            // chain branch: diag0 is symmetric
            acc += &self.apply_diag0(&adj);
            Some(GraphSignal::from_matrix(acc))
        } else {
            None
        };
        Ok((grads, input))
    }

    pub(crate) fn append_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.global_taps);
        out.extend_from_slice(&self.diag0);
        for m in &self.edge {
            out.extend_from_slice(m.values());
        }
    }

    pub(crate) fn read_params(&mut self, chunk: &[f64]) {
        let k1 = self.global_taps.len();
        let b = self.diag0.len();
        self.global_taps.copy_from_slice(&chunk[..k1]);
        self.diag0.copy_from_slice(&chunk[k1..k1 + b]);
        let nnz = self.edge_nnz();
        for (k, m) in self.edge.iter_mut().enumerate() {
            let start = k1 + b + k * nnz;
            m.values_mut().copy_from_slice(&chunk[start..start + nnz]);
        }
    }
}
