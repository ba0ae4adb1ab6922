//! Symmetric eigendecomposition and graph Fourier transforms.
//!
//! The solver is a cyclic Jacobi rotation scheme on a dense copy of the
//! shift operator. Graphs here stay small (a few hundred nodes at most), so
//! the quadratic sweeps are cheap and the result meets the reconstruction
//! and orthonormality bounds without any external solver.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signal::GraphSignal;

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a symmetric shift operator: S = U diag(l) Uᵀ.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Array2<f64>,
}

impl Spectrum {
    pub fn num_nodes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Graph frequencies in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal modes; column n pairs with eigenvalue n.
    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    /// Forward transform: Uᵀ x.
    pub fn gft(&self, x: &GraphSignal) -> Result<GraphSignal> {
        self.check_dims(x)?;
        Ok(GraphSignal::from_matrix(
            self.eigenvectors.t().dot(x.values()),
        ))
    }

    /// Inverse transform: U x̂.
    pub fn igft(&self, x_hat: &GraphSignal) -> Result<GraphSignal> {
        self.check_dims(x_hat)?;
        Ok(GraphSignal::from_matrix(self.eigenvectors.dot(x_hat.values())))
    }

    fn check_dims(&self, x: &GraphSignal) -> Result<()> {
        if x.num_nodes() != self.num_nodes() {
            return Err(Error::invalid(format!(
                "signal has {} rows but the spectrum covers {} nodes",
                x.num_nodes(),
                self.num_nodes()
            )));
        }
        Ok(())
    }
}

/// Decomposes the shift operator of `g`; the shift must be symmetric.
pub fn eigendecompose(g: &Graph) -> Result<Spectrum> {
    let asym = g.shift().asymmetry();
    if asym > 1e-12 {
        return Err(Error::unsupported(format!(
            "shift operator is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let dense = g.shift().to_dense();
    let (eigenvalues, eigenvectors) = symmetric_eigen(&dense)?;
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Cyclic Jacobi eigensolver for a dense symmetric matrix.
///
/// Returns eigenvalues in ascending order (stable under ties) and the
/// matching orthonormal eigenvector columns.
pub fn symmetric_eigen(matrix: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::invalid("eigensolver needs a square matrix"));
    }
    if n == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }

    let mut a = matrix.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let scale = matrix.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let tol = 1e-15 * scale;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_sum(&a);
        if off <= tol * (n * n) as f64 {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                // Rotation zeroing a[p][q]; see Golub & Van Loan sec. 8.5.
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    1.0 / (2.0 * theta)
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    if !converged {
        let residual = off_diagonal_sum(&a);
        if residual > 1e-10 * scale {
            return Err(Error::numeric(
                format!("Jacobi sweeps did not converge within {MAX_SWEEPS} iterations"),
                residual,
            ));
        }
    }

    // Stable ascending sort keeps tied eigenvalues in rotation order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).expect("finite"));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut sorted = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            sorted[(k, dst)] = v[(k, src)];
        }
    }
    Ok((eigenvalues, sorted))
}

fn off_diagonal_sum(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                sum += a[(p, q)].abs();
            }
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn reconstruction_error(m: &Array2<f64>, l: &[f64], u: &Array2<f64>) -> f64 {
        let n = m.nrows();
        let mut rec = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += u[(i, k)] * l[k] * u[(j, k)];
                }
                rec[(i, j)] = s;
            }
        }
        (&rec - m).iter().fold(0.0f64, |mx, x| mx.max(x.abs()))
    }

    #[test]
    fn identity_stays_identity() {
        let m: Array2<f64> = Array2::eye(3);
        let (l, u) = symmetric_eigen(&m).unwrap();
        assert_eq!(l, vec![1.0, 1.0, 1.0]);
        assert!(reconstruction_error(&m, &l, &u) < 1e-12);
    }

    #[test]
    fn two_clique_modes() {
        // K2 adjacency: eigenvalues -1 and 1, eigenvectors (1, -+1)/sqrt(2).
        let m = array![[0.0, 1.0], [1.0, 0.0]];
        let (l, u) = symmetric_eigen(&m).unwrap();
        assert!((l[0] + 1.0).abs() < 1e-12 && (l[1] - 1.0).abs() < 1e-12);
        let inv = 1.0 / 2.0f64.sqrt();
        for col in 0..2 {
            let (a, b) = (u[(0, col)].abs(), u[(1, col)].abs());
            assert!((a - inv).abs() < 1e-12 && (b - inv).abs() < 1e-12);
        }
        assert!(u[(0, 0)] * u[(1, 0)] < 0.0, "mode for -1 alternates sign");
        assert!(u[(0, 1)] * u[(1, 1)] > 0.0, "mode for +1 is constant-sign");
    }

    #[test]
    fn path3_frequencies() {
        // P3 adjacency has characteristic polynomial l(l^2 - 2).
        let m = array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let (l, _) = symmetric_eigen(&m).unwrap();
        let expect = [-(2.0f64.sqrt()), 0.0, 2.0f64.sqrt()];
        for (got, want) in l.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn random_matrices_meet_spectrum_bounds() {
        use rand::Rng;
        let mut rng = crate::rng::stream(11, "eigen-test", &[]);
        for trial in 0..100 {
            let n = 2 + (trial % 29);
            let mut m = Array2::zeros((n, n));
            for i in 0..n {
                for j in i..n {
                    let v = rng.random_range(-1.0..1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            let (l, u) = symmetric_eigen(&m).unwrap();
            for w in l.windows(2) {
                assert!(w[0] <= w[1]);
            }
            let gram = u.t().dot(&u);
            let eye: Array2<f64> = Array2::eye(n);
            let orth = (&gram - &eye).iter().fold(0.0f64, |mx, x| mx.max(x.abs()));
            assert!(orth < 1e-10, "orthonormality {orth} at n={n}");
            let scale = m.iter().fold(0.0f64, |mx, x| mx.max(x.abs()));
            assert!(reconstruction_error(&m, &l, &u) <= 1e-8 * scale.max(1e-30));
        }
    }
}
