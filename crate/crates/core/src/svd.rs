//! One-sided Jacobi singular value decomposition.
//!
//! Used where small singular values have to be separated cleanly from true
//! nullspace directions (spectral edge-variant basis construction, kernel
//! rank checks). One-sided Jacobi orthogonalizes the columns of A in place,
//! which resolves tiny singular values far better than forming AᵀA.

use ndarray::Array2;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Singular values (descending is NOT guaranteed; order matches `right`)
/// and right singular vectors of a real matrix.
pub struct SingularBasis {
    pub singular_values: Vec<f64>,
    /// Orthogonal matrix whose column j pairs with singular_values[j].
    pub right_vectors: Array2<f64>,
}

/// Computes singular values and right singular vectors of `a` (m x n).
pub fn right_singular_basis(a: &Array2<f64>) -> Result<SingularBasis> {
    let (m, n) = a.dim();
    let mut work = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);

    if m == 0 || n == 0 {
        return Ok(SingularBasis {
            singular_values: vec![0.0; n],
            right_vectors: v,
        });
    }

    let scale = a.iter().fold(0.0f64, |mx, x| mx.max(x.abs()));
    if scale == 0.0 {
        return Ok(SingularBasis {
            singular_values: vec![0.0; n],
            right_vectors: v,
        });
    }
    let eps = f64::EPSILON;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for k in 0..m {
                    let (x, y) = (work[(k, p)], work[(k, q)]);
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq.abs() <= eps * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                // Rotation that orthogonalizes columns p and q.
                let theta = (aqq - app) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (x, y) = (work[(k, p)], work[(k, q)]);
                    work[(k, p)] = c * x - s * y;
                    work[(k, q)] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * x - s * y;
                    v[(k, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        // Residual: largest remaining column correlation.
        let mut residual = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let mut apq = 0.0;
                for k in 0..m {
                    apq += work[(k, p)] * work[(k, q)];
                }
                residual = residual.max(apq.abs());
            }
        }
        if residual > 1e-10 * scale * scale {
            return Err(Error::numeric(
                format!("one-sided Jacobi SVD did not converge within {MAX_SWEEPS} sweeps"),
                residual,
            ));
        }
    }

    let singular_values = (0..n)
        .map(|j| {
            let mut s = 0.0;
            for k in 0..m {
                s += work[(k, j)] * work[(k, j)];
            }
            s.sqrt()
        })
        .collect();
    Ok(SingularBasis {
        singular_values,
        right_vectors: v,
    })
}

/// Smallest singular value of `a`.
pub fn min_singular_value(a: &Array2<f64>) -> Result<f64> {
    let basis = right_singular_basis(a)?;
    Ok(basis
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// Orthonormal basis of the nullspace of `a` at a relative cutoff:
/// directions with singular value <= rel_tol * max singular value.
pub fn nullspace_basis(a: &Array2<f64>, rel_tol: f64) -> Result<Array2<f64>> {
    let n = a.ncols();
    let basis = right_singular_basis(a)?;
    let sigma_max = basis.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = rel_tol * sigma_max;
    let keep: Vec<usize> = (0..n)
        .filter(|&j| basis.singular_values[j] <= cutoff)
        .collect();
    let mut out = Array2::zeros((n, keep.len()));
    for (dst, &src) in keep.iter().enumerate() {
        for k in 0..n {
            out[(k, dst)] = basis.right_vectors[(k, src)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_singular_values() {
        let a = array![[3.0, 0.0], [0.0, -2.0]];
        let mut s = right_singular_basis(&a).unwrap().singular_values;
        s.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((s[0] - 2.0).abs() < 1e-12 && (s[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nullspace_of_rank_one_matrix() {
        // rows all proportional to (1, 1, 1): nullspace dim 2.
        let a = array![[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]];
        let ns = nullspace_basis(&a, 1e-9).unwrap();
        assert_eq!(ns.ncols(), 2);
        for j in 0..2 {
            let col = ns.column(j);
            let r0: f64 = col.iter().sum();
            assert!(r0.abs() < 1e-12, "column not in nullspace: {r0}");
            let norm: f64 = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        // columns orthogonal
        let dot: f64 = (0..3).map(|k| ns[(k, 0)] * ns[(k, 1)]).sum();
        assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn random_rectangular_reconstruction() {
        use rand::Rng;
        let mut rng = crate::rng::stream(3, "svd-test", &[]);
        for _ in 0..20 {
            let m = rng.random_range(2..10usize);
            let n = rng.random_range(2..8usize);
            let mut a = Array2::zeros((m, n));
            for v in a.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            let basis = right_singular_basis(&a).unwrap();
            // Columns of A V are mutually orthogonal with norms sigma_j.
            let av = a.dot(&basis.right_vectors);
            for p in 0..n {
                let norm: f64 = av.column(p).iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - basis.singular_values[p]).abs() < 1e-10);
                for q in p + 1..n {
                    let dot: f64 = (0..m).map(|k| av[(k, p)] * av[(k, q)]).sum();
                    assert!(dot.abs() < 1e-9);
                }
            }
        }
    }
}
