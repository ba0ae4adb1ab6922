//! Spectral edge-variant filters.
//!
//! Restricting every edge-variant coefficient matrix to share the
//! eigenvectors of S turns the chain into diagonal products. The admissible
//! response vectors lambda^(k) form the nullspace of the selected Khatri-Rao
//! system C_I (U * U): rows indexed by the zero entries I of S + I, so that
//! U diag(lambda) Uᵀ vanishes off the graph support.

use ndarray::Array2;

use crate::eigen::Spectrum;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signal::GraphSignal;
use crate::svd;

use super::{check_signal_dims, check_upstream_dims, FilterCache};

/// Largest graph for which the dense |I| x N system is assembled.
const MAX_NODES: usize = 512;

const NULLSPACE_REL_TOL: f64 = 1e-9;

/// Orthonormal basis of admissible spectral responses.
#[derive(Debug, Clone)]
pub struct SpectralEVBasis {
    basis: Array2<f64>,
    zero_index_set: Vec<(usize, usize)>,
}

impl SpectralEVBasis {
    /// N x r basis matrix; columns are orthonormal response vectors.
    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn num_nodes(&self) -> usize {
        self.basis.nrows()
    }

    /// The index set I: zero entries of S + I.
    pub fn zero_index_set(&self) -> &[(usize, usize)] {
        &self.zero_index_set
    }

    /// Response vector B mu for one coefficient vector.
    pub fn response(&self, mu: &[f64]) -> Result<Vec<f64>> {
        if mu.len() != self.rank() {
            return Err(Error::invalid(format!(
                "coefficient vector of length {} does not match basis rank {}",
                mu.len(),
                self.rank()
            )));
        }
        let n = self.num_nodes();
        let mut h = vec![0.0; n];
        for (row, hv) in h.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, &m) in mu.iter().enumerate() {
                s += self.basis[(row, j)] * m;
            }
            *hv = s;
        }
        Ok(h)
    }
}

/// Builds the admissible-response basis for a symmetric graph.
///
/// Assembles A = C_I (U * U) (Khatri-Rao of U with itself, rows selected by
/// the zero set I) and returns an orthonormal nullspace basis at the
/// relative singular-value cutoff 1e-9. An empty I (complete support) yields
/// the full identity basis; an empty nullspace yields rank 0.
pub fn spectral_ev_basis(sp: &Spectrum, g: &Graph) -> Result<SpectralEVBasis> {
    let n = g.num_nodes();
    if sp.num_nodes() != n {
        return Err(Error::invalid("spectrum and graph sizes do not match"));
    }
    let asym = g.shift().asymmetry();
    if asym > 1e-12 {
        return Err(Error::unsupported(format!(
            "spectral edge-variant basis needs a symmetric shift (asymmetry {asym:e})"
        )));
    }
    if n > MAX_NODES {
        return Err(Error::invalid(format!(
            "dense nullspace assembly is limited to {MAX_NODES} nodes, got {n}"
        )));
    }
    let support = g.support_with_diag();
    let mut zero_index_set = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if !support.contains(i, j) {
                zero_index_set.push((i, j));
            }
        }
    }
    if zero_index_set.is_empty() {
        return Ok(SpectralEVBasis {
            basis: Array2::eye(n),
            zero_index_set,
        });
    }
    let u = sp.eigenvectors();
    let mut a = Array2::zeros((zero_index_set.len(), n));
    for (row, &(i, j)) in zero_index_set.iter().enumerate() {
        for col in 0..n {
            a[(row, col)] = u[(i, col)] * u[(j, col)];
        }
    }
    let basis = svd::nullspace_basis(&a, NULLSPACE_REL_TOL)?;
    Ok(SpectralEVBasis {
        basis,
        zero_index_set,
    })
}

/// Expansion coefficients mu^(1)..mu^(K) over a [`SpectralEVBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEvParams {
    mu: Vec<Vec<f64>>,
}

impl SpectralEvParams {
    pub fn new(mu: Vec<Vec<f64>>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::invalid(
                "a spectral edge-variant filter needs order K >= 1",
            ));
        }
        let rank = mu[0].len();
        if mu.iter().any(|m| m.len() != rank) {
            return Err(Error::invalid(
                "all coefficient vectors must share the basis rank",
            ));
        }
        if mu.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("expansion coefficients must be finite"));
        }
        Ok(Self { mu })
    }

    pub fn zeros(order: usize, rank: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid(
                "a spectral edge-variant filter needs order K >= 1",
            ));
        }
        Ok(Self {
            mu: vec![vec![0.0; rank]; order],
        })
    }

    pub fn mu(&self) -> &[Vec<f64>] {
        &self.mu
    }

    pub fn order(&self) -> usize {
        self.mu.len()
    }

    pub fn rank(&self) -> usize {
        self.mu[0].len()
    }

    pub fn num_params(&self) -> usize {
        self.mu.len() * self.mu[0].len()
    }

    /// y = U (sum_{k=1..K} prod_{kappa<=k} diag(B mu^(kappa))) Uᵀ x.
    pub fn forward(
        &self,
        basis: &SpectralEVBasis,
        sp: &Spectrum,
        x: &GraphSignal,
    ) -> Result<GraphSignal> {
        Ok(self.forward_with_cache(basis, sp, x)?.0)
    }

    /// Cache layout: states[0] = Uᵀx, states[k] = k-th running product.
    pub(crate) fn forward_with_cache(
        &self,
        basis: &SpectralEVBasis,
        sp: &Spectrum,
        x: &GraphSignal,
    ) -> Result<(GraphSignal, FilterCache)> {
        check_signal_dims(sp.num_nodes(), x)?;
        if basis.num_nodes() != sp.num_nodes() {
            return Err(Error::invalid("basis and spectrum sizes do not match"));
        }
        let x_hat = sp.gft(x)?.into_values();
        let mut states = Vec::with_capacity(self.mu.len() + 1);
        let mut acc: Array2<f64> = Array2::zeros(x_hat.dim());
        states.push(x_hat);
        for mu_k in &self.mu {
            let h = basis.response(mu_k)?;
            let prev = states.last().expect("nonempty");
            let mut next = prev.clone();
            for (row, &hv) in h.iter().enumerate() {
                for c in 0..next.ncols() {
                    next[(row, c)] *= hv;
                }
            }
            acc += &next;
            states.push(next);
        }
        let y = sp.igft(&GraphSignal::from_matrix(acc))?;
        Ok((y, FilterCache { states }))
    }

    pub(crate) fn backward(
        &self,
        basis: &SpectralEVBasis,
        sp: &Spectrum,
        cache: &FilterCache,
        upstream: &GraphSignal,
        need_input_grad: bool,
    ) -> Result<(Vec<f64>, Option<GraphSignal>)> {
        check_upstream_dims(&cache.states[0], upstream)?;
        let order = self.mu.len();
        let rank = self.rank();
        let n = sp.num_nodes();
        let g_hat = sp.gft(upstream)?.into_values();

        let mut grads = vec![0.0; order * rank];
        // adjoint of the running product p^(k); every p^(k) also feeds the sum
        let mut adj = g_hat.clone();
        for k in (0..order).rev() {
            let prev = &cache.states[k];
            let mut dh = vec![0.0; n];
            for (row, d) in dh.iter_mut().enumerate() {
                let mut s = 0.0;
                for c in 0..adj.ncols() {
                    s += adj[(row, c)] * prev[(row, c)];
                }
                *d = s;
            }
            let seg = &mut grads[k * rank..(k + 1) * rank];
            for (j, gslot) in seg.iter_mut().enumerate() {
                let mut s = 0.0;
                for (row, &d) in dh.iter().enumerate() {
                    s += basis.basis()[(row, j)] * d;
                }
                *gslot = s;
            }
            let h = basis.response(&self.mu[k])?;
            for (row, &hv) in h.iter().enumerate() {
                for c in 0..adj.ncols() {
                    adj[(row, c)] *= hv;
                }
            }
            if k > 0 {
                adj += &g_hat;
            }
        }
        let input = if need_input_grad {
            Some(sp.igft(&GraphSignal::from_matrix(adj))?)
        } else {
            None
        };
        Ok((grads, input))
    }

    pub(crate) fn append_params(&self, out: &mut Vec<f64>) {
        for m in &self.mu {
            out.extend_from_slice(m);
        }
    }

    pub(crate) fn read_params(&mut self, chunk: &[f64]) {
        let rank = self.rank();
        for (k, m) in self.mu.iter_mut().enumerate() {
            m.copy_from_slice(&chunk[k * rank..(k + 1) * rank]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eigendecompose;
    use crate::filters::spectral::SpectralParams;

    fn p3_with_spectrum() -> (Graph, Spectrum) {
        let g = Graph::undirected_adjacency(3, &[(0, 1), (1, 2)]).unwrap();
        let sp = eigendecompose(&g).unwrap();
        (g, sp)
    }

    #[test]
    fn complete_graph_has_full_rank() {
        let g = Graph::undirected_adjacency(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
            .unwrap();
        let sp = eigendecompose(&g).unwrap();
        let basis = spectral_ev_basis(&sp, &g).unwrap();
        assert!(basis.zero_index_set().is_empty());
        assert_eq!(basis.rank(), 4);
    }

    #[test]
    fn edgeless_graph_keeps_the_constant_direction() {
        // S = 0 on 3 nodes: I is every off-diagonal pair; diag(c 1) = c I is
        // always admissible, so the rank is at least 1.
        let g = Graph::from_entries(3, &[], true).unwrap();
        let sp = eigendecompose(&g).unwrap();
        let basis = spectral_ev_basis(&sp, &g).unwrap();
        assert_eq!(basis.zero_index_set().len(), 6);
        assert!(basis.rank() >= 1);
        // the all-ones response lies in the span
        let u = sp.eigenvectors();
        let ones = vec![1.0; 3];
        // project ones onto the basis and compare
        let mut residual = ones.clone();
        for j in 0..basis.rank() {
            let dot: f64 = (0..3).map(|i| basis.basis()[(i, j)] * ones[i]).sum();
            for i in 0..3 {
                residual[i] -= dot * basis.basis()[(i, j)];
            }
        }
        let err: f64 = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err < 1e-8, "constant response missing: residual {err}");
        let _ = u;
    }

    #[test]
    fn basis_columns_vanish_on_the_zero_set() {
        let (g, sp) = p3_with_spectrum();
        let basis = spectral_ev_basis(&sp, &g).unwrap();
        assert!(basis.rank() >= 2, "I and S responses are always admissible");
        let u = sp.eigenvectors();
        for j in 0..basis.rank() {
            let col: Vec<f64> = (0..3).map(|i| basis.basis()[(i, j)]).collect();
            for &(r, c) in basis.zero_index_set() {
                let mut v = 0.0;
                for n in 0..3 {
                    v += u[(r, n)] * col[n] * u[(c, n)];
                }
                assert!(v.abs() <= 1e-8, "reconstruction leaks at ({r}, {c}): {v}");
            }
        }
        // orthonormal columns
        for a in 0..basis.rank() {
            for b in a..basis.rank() {
                let dot: f64 = (0..3)
                    .map(|i| basis.basis()[(i, a)] * basis.basis()[(i, b)])
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn order_one_reduces_to_the_spectral_filter() {
        use rand::Rng;
        let (g, sp) = p3_with_spectrum();
        let basis = spectral_ev_basis(&sp, &g).unwrap();
        let mut rng = crate::rng::stream(61, "sev-degeneracy", &[]);
        let mu: Vec<f64> = (0..basis.rank()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sev = SpectralEvParams::new(vec![mu.clone()]).unwrap();
        let spectral = SpectralParams::new(basis.basis().clone(), mu).unwrap();
        let x = GraphSignal::from_column(vec![0.4, -1.0, 0.9]).unwrap();
        let a = sev.forward(&basis, &sp, &x).unwrap();
        let b = spectral.forward(&sp, &x).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn chain_matches_vertex_domain_ev_oracle() {
        use rand::Rng;
        let (g, sp) = p3_with_spectrum();
        let basis = spectral_ev_basis(&sp, &g).unwrap();
        let mut rng = crate::rng::stream(67, "sev-oracle", &[]);
        let mu: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..basis.rank()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let sev = SpectralEvParams::new(mu.clone()).unwrap();
        let x = GraphSignal::from_column(vec![1.0, 0.5, -0.25]).unwrap();
        let y = sev.forward(&basis, &sp, &x).unwrap();

        // dense oracle: Phi^(k) = U diag(B mu^(k)) Uᵀ, summed running products
        let u = sp.eigenvectors();
        let n = 3;
        let phis: Vec<Array2<f64>> = mu
            .iter()
            .map(|m| {
                let h = basis.response(m).unwrap();
                let mut diag = Array2::zeros((n, n));
                for i in 0..n {
                    diag[(i, i)] = h[i];
                }
                u.dot(&diag).dot(&u.t())
            })
            .collect();
        let mut hmat: Array2<f64> = Array2::zeros((n, n));
        let mut product: Array2<f64> = Array2::eye(n);
        for phi in &phis {
            product = phi.dot(&product);
            hmat += &product;
        }
        let oracle = GraphSignal::from_matrix(hmat.dot(x.values()));
        assert!(y.max_abs_diff(&oracle) < 1e-8);
    }

    #[test]
    fn all_pass_chain_scales_by_order() {
        // On a complete graph the basis is the identity, so mu = 1 gives
        // B mu = all-ones and the chain sums to K x.
        let g = Graph::undirected_adjacency(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let sp = eigendecompose(&g).unwrap();
        let basis = spectral_ev_basis(&sp, &g).unwrap();
        let k = 3;
        let mu = vec![vec![1.0; basis.rank()]; k];
        let sev = SpectralEvParams::new(mu).unwrap();
        let x = GraphSignal::from_column(vec![0.2, -0.6, 1.4]).unwrap();
        let y = sev.forward(&basis, &sp, &x).unwrap();
        let scaled = GraphSignal::from_matrix(x.values() * k as f64);
        assert!(y.max_abs_diff(&scaled) < 1e-10);
    }

    #[test]
    fn rank_mismatch_is_rejected() {
        let (g, sp) = p3_with_spectrum();
        let basis = spectral_ev_basis(&sp, &g).unwrap();
        let sev = SpectralEvParams::new(vec![vec![1.0; basis.rank() + 1]]).unwrap();
        let x = GraphSignal::from_column(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(sev.forward(&basis, &sp, &x).is_err());
    }
}
