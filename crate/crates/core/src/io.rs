//! Dense-matrix CSV serialization.
//!
//! Format: one header line `rows,cols`, then one comma-separated line per
//! row; values print in shortest round-trip decimal form.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::eigen::Spectrum;
use crate::error::{Error, Result};

pub fn write_dense_csv<W: Write>(matrix: &Array2<f64>, mut w: W) -> Result<()> {
    let (rows, cols) = matrix.dim();
    writeln!(w, "{rows},{cols}")?;
    for row in matrix.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn read_dense_csv<R: Read>(r: R) -> Result<Array2<f64>> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("empty CSV input"))??;
    let (rows, cols) = header
        .split_once(',')
        .ok_or_else(|| Error::invalid("CSV header must be `rows,cols`"))?;
    let rows: usize = rows
        .trim()
        .parse()
        .map_err(|_| Error::invalid("malformed row count"))?;
    let cols: usize = cols
        .trim()
        .parse()
        .map_err(|_| Error::invalid("malformed column count"))?;
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::invalid("CSV ended before the declared row count"))??;
        let mut count = 0;
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("malformed value `{field}`")))?;
            values.push(v);
            count += 1;
        }
        if count != cols {
            return Err(Error::invalid(format!(
                "row has {count} values, expected {cols}"
            )));
        }
    }
    Array2::from_shape_vec((rows, cols), values)
        .map_err(|e| Error::invalid(format!("shape error: {e}")))
}

pub fn save_dense_csv(matrix: &Array2<f64>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dense_csv(matrix, std::io::BufWriter::new(file))
}

pub fn load_dense_csv(path: &Path) -> Result<Array2<f64>> {
    let file = std::fs::File::open(path)?;
    read_dense_csv(file)
}

/// Saves a spectrum as two CSV files: eigenvalues (N x 1) and the
/// eigenvector matrix (N x N).
pub fn save_spectrum_csv(sp: &Spectrum, values_path: &Path, vectors_path: &Path) -> Result<()> {
    let n = sp.num_nodes();
    let eigenvalues =
        Array2::from_shape_vec((n, 1), sp.eigenvalues().to_vec()).expect("column shape");
    save_dense_csv(&eigenvalues, values_path)?;
    save_dense_csv(sp.eigenvectors(), vectors_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        use rand::Rng;
        let mut rng = crate::rng::stream(2, "csv", &[]);
        let m = Array2::from_shape_fn((5, 3), |_| {
            // mix of scales to exercise the shortest-representation printer
            rng.random_range(-1.0..1.0) * 10f64.powi(rng.random_range(-12..12))
        });
        let mut buf = Vec::new();
        write_dense_csv(&m, &mut buf).unwrap();
        let back = read_dense_csv(buf.as_slice()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(read_dense_csv("".as_bytes()).is_err());
        assert!(read_dense_csv("2,2\n1,2\n".as_bytes()).is_err());
        assert!(read_dense_csv("1,2\n1,2,3\n".as_bytes()).is_err());
        assert!(read_dense_csv("1,1\nfoo\n".as_bytes()).is_err());
    }
}
