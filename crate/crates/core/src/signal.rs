//! Graph signals: dense node-by-feature value matrices.

use ndarray::Array2;

use crate::error::{Error, Result};

/// A dense N x F block of signal values; column f is one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal {
    values: Array2<f64>,
}

impl GraphSignal {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.ncols() == 0 {
            return Err(Error::invalid("a graph signal needs at least one feature"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("graph signal entries must be finite"));
        }
        Ok(Self { values })
    }

    pub fn zeros(num_nodes: usize, num_features: usize) -> Self {
        Self {
            values: Array2::zeros((num_nodes, num_features)),
        }
    }

    /// Kronecker delta centered at `node` (0-based), one feature column.
    pub fn delta(num_nodes: usize, node: usize) -> Result<Self> {
        if node >= num_nodes {
            return Err(Error::invalid(format!(
                "delta node {node} out of range for {num_nodes} nodes"
            )));
        }
        let mut values = Array2::zeros((num_nodes, 1));
        values[(node, 0)] = 1.0;
        Ok(Self { values })
    }

    pub fn from_column(column: Vec<f64>) -> Result<Self> {
        let n = column.len();
        let values = Array2::from_shape_vec((n, 1), column).expect("shape matches length");
        Self::new(values)
    }

    pub fn num_nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// Wraps a matrix that is already known to be finite.
    pub(crate) fn from_matrix(values: Array2<f64>) -> Self {
        Self { values }
    }

    pub fn column(&self, f: usize) -> GraphSignal {
        let col = self.values.column(f).to_owned();
        let n = col.len();
        GraphSignal {
            values: col.into_shape_with_order((n, 1)).expect("column reshape"),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &GraphSignal) -> f64 {
        assert_eq!(self.values.dim(), other.values.dim());
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_is_a_unit_vector() {
        let d = GraphSignal::delta(4, 2).unwrap();
        assert_eq!(d.values().column(0).to_vec(), vec![0.0, 0.0, 1.0, 0.0]);
        assert!(GraphSignal::delta(4, 4).is_err());
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let m = Array2::from_shape_vec((1, 1), vec![f64::NAN]).unwrap();
        assert!(GraphSignal::new(m).is_err());
    }
}
