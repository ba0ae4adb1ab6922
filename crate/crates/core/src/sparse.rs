//! Compressed-row sparse matrices.
//!
//! The shift operator and every edge-variant coefficient matrix live in this
//! layout. Coefficient matrices of one filter share a single
//! [`SparsityPattern`] behind an `Arc`, so the index structure is stored once
//! and gradients can be laid out per stored nonzero.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Row-compressed index structure: sorted, duplicate-free column lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    num_rows: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern from (row, col) pairs; duplicates collapse.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::invalid(format!(
                    "index ({i}, {j}) out of bounds for a {n}x{n} pattern"
                )));
            }
            by_row[i].push(j);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for cols in &mut by_row {
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            num_rows: n,
            row_ptr,
            col_idx,
        })
    }

    /// The same pattern with every diagonal slot present.
    pub fn with_diagonal(&self) -> Self {
        let pairs = self
            .iter()
            .chain((0..self.num_rows).map(|i| (i, i)))
            .collect::<Vec<_>>();
        Self::from_pairs(self.num_rows, pairs).expect("indices already validated")
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn off_diagonal_nnz(&self) -> usize {
        self.iter().filter(|&(i, j)| i != j).count()
    }

    /// Column indices stored in row `i`.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Global value index of entry (i, j), if stored.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|k| start + k)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.find(i, j).is_some()
    }

    /// Stored (row, col) pairs in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_rows).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.iter().all(|(i, j)| self.contains(j, i))
    }
}

/// A real square sparse matrix over a shared [`SparsityPattern`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn from_values(pattern: Arc<SparsityPattern>, values: Vec<f64>) -> Result<Self> {
        if values.len() != pattern.nnz() {
            return Err(Error::invalid(format!(
                "value count {} does not match pattern nnz {}",
                values.len(),
                pattern.nnz()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sparse matrix values must be finite"));
        }
        Ok(Self { pattern, values })
    }

    /// Builds a matrix from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let pattern = Arc::new(SparsityPattern::from_pairs(
            n,
            triplets.iter().map(|&(i, j, _)| (i, j)),
        )?);
        let mut values = vec![0.0; pattern.nnz()];
        for &(i, j, v) in triplets {
            let k = pattern.find(i, j).expect("pattern built from these pairs");
            values[k] += v;
        }
        Self::from_values(pattern, values)
    }

    pub fn num_rows(&self) -> usize {
        self.pattern.num_rows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Stored entries as (row, col, value) in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.pattern
            .iter()
            .zip(self.values.iter())
            .map(|((i, j), &v)| (i, j, v))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            pattern: Arc::clone(&self.pattern),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Largest |A_ij - A_ji| over stored entries (0 for symmetric matrices).
    pub fn asymmetry(&self) -> f64 {
        self.entries()
            .map(|(i, j, v)| (v - self.value_at(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// y = A x for a dense column block x of shape (n, f).
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let n = self.num_rows();
        let f = x.ncols();
        assert_eq!(x.nrows(), n, "operand row count must match matrix size");
        let mut y = Array2::zeros((n, f));
        for i in 0..n {
            let start = self.pattern.row_ptr[i];
            let end = self.pattern.row_ptr[i + 1];
            for k in start..end {
                let j = self.pattern.col_idx[k];
                let v = self.values[k];
                for c in 0..f {
                    y[(i, c)] += v * x[(j, c)];
                }
            }
        }
        y
    }

    /// y = Aᵀ x.
    pub fn apply_transpose(&self, x: &Array2<f64>) -> Array2<f64> {
        let n = self.num_rows();
        let f = x.ncols();
        assert_eq!(x.nrows(), n, "operand row count must match matrix size");
        let mut y = Array2::zeros((n, f));
        for i in 0..n {
            let start = self.pattern.row_ptr[i];
            let end = self.pattern.row_ptr[i + 1];
            for k in start..end {
                let j = self.pattern.col_idx[k];
                let v = self.values[k];
                for c in 0..f {
                    y[(j, c)] += v * x[(i, c)];
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_rows();
        let mut dense = Array2::zeros((n, n));
        for (i, j, v) in self.entries() {
            dense[(i, j)] = v;
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> SparseMatrix {
        // 0 - 1 - 2 adjacency
        SparseMatrix::from_triplets(3, &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)])
            .unwrap()
    }

    #[test]
    fn rows_are_sorted_and_deduplicated() {
        let p = SparsityPattern::from_pairs(3, vec![(0, 2), (0, 1), (0, 2), (2, 0)]).unwrap();
        assert_eq!(p.row(0), &[1, 2]);
        assert_eq!(p.row(1), &[] as &[usize]);
        assert_eq!(p.nnz(), 3);
    }

    #[test]
    fn with_diagonal_adds_all_slots() {
        let p = SparsityPattern::from_pairs(3, vec![(0, 1), (1, 1)]).unwrap();
        let d = p.with_diagonal();
        assert_eq!(d.nnz(), 4);
        for i in 0..3 {
            assert!(d.contains(i, i));
        }
    }

    #[test]
    fn apply_matches_dense() {
        let a = path3();
        let x = Array2::from_shape_vec((3, 1), vec![1.0, 2.0, 3.0]).unwrap();
        let y = a.apply(&x);
        let dense = a.to_dense().dot(&x);
        assert_eq!(y, dense);
    }

    #[test]
    fn transpose_apply_matches_dense() {
        let a = SparseMatrix::from_triplets(3, &[(0, 1, 2.0), (2, 0, -1.0)]).unwrap();
        let x = Array2::from_shape_vec((3, 2), vec![1.0, 0.5, 2.0, -1.0, 3.0, 0.0]).unwrap();
        let y = a.apply_transpose(&x);
        let dense = a.to_dense().t().dot(&x);
        assert_eq!(y, dense);
    }

    #[test]
    fn triplet_duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(2, &[(0, 1, 1.0), (0, 1, 0.5)]).unwrap();
        assert_eq!(a.value_at(0, 1), 1.5);
        assert_eq!(a.nnz(), 1);
    }

    #[test]
    fn out_of_bounds_index_is_rejected() {
        assert!(SparseMatrix::from_triplets(2, &[(0, 2, 1.0)]).is_err());
    }
}
