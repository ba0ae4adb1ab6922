//! Graph representation, random graph generation, and vertex-domain shifts.
//!
//! A [`Graph`] owns the sparse shift operator S. Storage follows the GSP
//! convention that a stored entry (i, j) weighs the edge (j, i), so row i of
//! S lists the in-neighborhood of node i. Undirected graphs store both
//! triangles with bit-identical values.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::rng;
use crate::signal::GraphSignal;
use crate::sparse::{SparseMatrix, SparsityPattern};

#[derive(Debug, Clone)]
pub struct Graph {
    num_nodes: usize,
    num_directed_edges: usize,
    shift: SparseMatrix,
    raw_weights: Option<SparseMatrix>,
    support_with_diag: Arc<SparsityPattern>,
    neighborhoods: Vec<Vec<usize>>,
    undirected: bool,
    unit_spectral_radius: bool,
}

impl Graph {
    /// Builds a graph from stored-entry triplets (row, col, weight).
    ///
    /// A triplet (i, j, w) weighs the edge (j, i); duplicates are rejected.
    pub fn from_entries(
        num_nodes: usize,
        entries: &[(usize, usize, f64)],
        undirected: bool,
    ) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::invalid("a graph needs at least one node"));
        }
        let shift = SparseMatrix::from_triplets(num_nodes, entries)?;
        if shift.nnz() != entries.len() {
            return Err(Error::invalid("duplicate entries in graph construction"));
        }
        Self::from_shift(shift, undirected)
    }

    /// Wraps an already-assembled shift operator.
    pub fn from_shift(shift: SparseMatrix, undirected: bool) -> Result<Self> {
        if undirected && shift.asymmetry() != 0.0 {
            return Err(Error::invalid(
                "undirected graphs must store both triangles bit-exactly",
            ));
        }
        let num_nodes = shift.num_rows();
        let num_directed_edges = shift.pattern().off_diagonal_nnz();
        let support_with_diag = Arc::new(shift.pattern().with_diagonal());
        let neighborhoods = (0..num_nodes)
            .map(|i| {
                shift
                    .pattern()
                    .row(i)
                    .iter()
                    .copied()
                    .filter(|&j| j != i)
                    .collect()
            })
            .collect();
        let raw_weights = Some(shift.clone());
        Ok(Self {
            num_nodes,
            num_directed_edges,
            shift,
            raw_weights,
            support_with_diag,
            neighborhoods,
            undirected,
            unit_spectral_radius: false,
        })
    }

    /// Unweighted undirected graph from a list of (i, j) edges, 0-based.
    pub fn undirected_adjacency(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut entries = Vec::with_capacity(edges.len() * 2);
        for &(i, j) in edges {
            if i == j {
                return Err(Error::invalid("self-loops are not edges"));
            }
            entries.push((i, j, 1.0));
            entries.push((j, i, 1.0));
        }
        Self::from_entries(num_nodes, &entries, true)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of ordered edge pairs (each direction counted once).
    pub fn num_directed_edges(&self) -> usize {
        self.num_directed_edges
    }

    pub fn shift(&self) -> &SparseMatrix {
        &self.shift
    }

    pub fn raw_weights(&self) -> Option<&SparseMatrix> {
        self.raw_weights.as_ref()
    }

    /// Nonzero pattern of S + I, shared by edge-variant coefficient matrices.
    pub fn support_with_diag(&self) -> &Arc<SparsityPattern> {
        &self.support_with_diag
    }

    /// In-neighborhood of node i: nodes j with an edge (j, i).
    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.neighborhoods[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighborhoods[i].len()
    }

    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    /// True once the shift has been rescaled to unit spectral radius.
    pub fn has_unit_spectral_radius(&self) -> bool {
        self.unit_spectral_radius
    }

    /// S x through a sparse row traversal; cost O((M + N) F).
    pub fn shift_apply(&self, x: &GraphSignal) -> Result<GraphSignal> {
        if x.num_nodes() != self.num_nodes {
            return Err(Error::invalid(format!(
                "signal has {} rows but the graph has {} nodes",
                x.num_nodes(),
                self.num_nodes
            )));
        }
        Ok(GraphSignal::from_matrix(self.shift.apply(x.values())))
    }

    /// Sᵗ δ_node computed by repeated shifting (0-based node).
    pub fn diffuse_delta(&self, node: usize, t: usize) -> Result<GraphSignal> {
        let mut x = GraphSignal::delta(self.num_nodes, node)?;
        for _ in 0..t {
            x = self.shift_apply(&x)?;
        }
        Ok(x)
    }

    /// Rescales the raw weights by their largest eigenvalue: S = W / lambda_max(W).
    pub fn normalize_by_spectral_radius(&self) -> Result<Graph> {
        if !self.undirected {
            return Err(Error::invalid(
                "spectral-radius normalization expects an undirected graph",
            ));
        }
        let raw = self
            .raw_weights
            .as_ref()
            .ok_or_else(|| Error::invalid("raw weights are not available"))?;
        if raw.max_abs() == 0.0 {
            return Err(Error::invalid(
                "cannot normalize a zero weight matrix (lambda_max = 0)",
            ));
        }
        let (eigenvalues, _) = symmetric_eigen(&raw.to_dense())?;
        let lambda_max = eigenvalues.last().copied().unwrap_or(0.0);
        if lambda_max <= 0.0 {
            return Err(Error::invalid(format!(
                "largest eigenvalue {lambda_max} is not positive"
            )));
        }
        let mut g = self.clone();
        g.shift = raw.scaled(1.0 / lambda_max);
        g.raw_weights = Some(raw.clone());
        g.unit_spectral_radius = true;
        Ok(g)
    }

    /// Connectivity of the undirected view (edges taken in both directions).
    pub fn is_connected(&self) -> bool {
        if self.num_nodes == 0 {
            return true;
        }
        let adj = self.undirected_view();
        let mut seen = vec![false; self.num_nodes];
        let mut queue = std::collections::VecDeque::new();
        seen[0] = true;
        queue.push_back(0);
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.num_nodes
    }

    /// Unweighted hop distances from `source` over the undirected view;
    /// unreachable nodes get `usize::MAX`.
    pub fn hop_distances(&self, source: usize) -> Vec<usize> {
        let adj = self.undirected_view();
        let mut dist = vec![usize::MAX; self.num_nodes];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    fn undirected_view(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.num_nodes];
        for (i, j) in self.shift.pattern().iter() {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Serializes the shift operator as a text edge list.
    ///
    /// Format: a header `N M directed|undirected` where M counts the data
    /// lines, then one `i j w` triple per stored entry, 1-indexed, meaning an
    /// edge from i to j of weight w; weights print in shortest round-trip
    /// decimal form.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        let kind = if self.undirected {
            "undirected"
        } else {
            "directed"
        };
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.num_nodes, self.shift.nnz(), kind).expect("string write");
        for (row, col, v) in self.shift.entries() {
            // stored (row, col) weighs the edge col -> row
            writeln!(out, "{} {} {}", col + 1, row + 1, v).expect("string write");
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn save_edge_list(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_edge_list(std::io::BufWriter::new(file))
    }

    pub fn read_edge_list<R: Read>(r: R) -> Result<Graph> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::invalid("empty edge-list input"))??;
        let mut parts = header.split_whitespace();
        let n: usize = parse_field(parts.next(), "node count")?;
        let m: usize = parse_field(parts.next(), "entry count")?;
        let kind = parts
            .next()
            .ok_or_else(|| Error::invalid("header missing directed|undirected flag"))?;
        let undirected = match kind {
            "undirected" => true,
            "directed" => false,
            other => {
                return Err(Error::invalid(format!(
                    "unknown graph kind `{other}` in edge-list header"
                )))
            }
        };
        let mut entries = Vec::with_capacity(m);
        for _ in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::invalid("edge list ended before the declared count"))??;
            let mut parts = line.split_whitespace();
            let i: usize = parse_field(parts.next(), "source node")?;
            let j: usize = parse_field(parts.next(), "target node")?;
            let w: f64 = parse_field(parts.next(), "edge weight")?;
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::invalid(format!(
                    "edge ({i}, {j}) out of range 1..={n}"
                )));
            }
            if !w.is_finite() {
                return Err(Error::invalid("edge weights must be finite"));
            }
            // line i -> j lands in row j, column i
            entries.push((j - 1, i - 1, w));
        }
        Graph::from_entries(n, &entries, undirected)
    }

    pub fn load_edge_list(path: &Path) -> Result<Graph> {
        let file = std::fs::File::open(path)?;
        Graph::read_edge_list(file)
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::invalid(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::invalid(format!("malformed {what}")))
}

/// Stochastic block model with contiguous equally sized communities.
///
/// Nodes 0..N-1 split into C blocks of N/C consecutive nodes; every unordered
/// pair is sampled independently with the intra- or inter-community
/// probability. The generator never resamples for connectivity.
pub fn build_sbm(
    num_nodes: usize,
    num_communities: usize,
    p_intra: f64,
    p_inter: f64,
    seed: u64,
) -> Result<Graph> {
    if num_nodes == 0 || num_communities == 0 {
        return Err(Error::invalid("node and community counts must be positive"));
    }
    if num_nodes % num_communities != 0 {
        return Err(Error::invalid(format!(
            "{num_nodes} nodes cannot be divided into {num_communities} equal communities"
        )));
    }
    for (name, p) in [("p_intra", p_intra), ("p_inter", p_inter)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("{name} = {p} is not a probability")));
        }
    }
    let block = num_nodes / num_communities;
    let mut rng = rng::stream(seed, "sbm-edges", &[]);
    let mut entries = Vec::new();
    for i in 0..num_nodes {
        for j in (i + 1)..num_nodes {
            let p = if i / block == j / block {
                p_intra
            } else {
                p_inter
            };
            if rng.random::<f64>() < p {
                entries.push((i, j, 1.0));
                entries.push((j, i, 1.0));
            }
        }
    }
    Graph::from_entries(num_nodes, &entries, true)
}
