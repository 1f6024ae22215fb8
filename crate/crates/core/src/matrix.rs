use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        let n = rows.len();
        Ok(Matrix {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }

    /// Copy with columns reordered so that output column `j` is input column `perm[j]`.
    pub fn permute_cols(&self, perm: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, perm.len(), |i, j| self.get(i, perm[j]))
    }

    /// Copy with rows reordered so that output row `i` is input row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Matrix {
        Matrix::from_fn(perm.len(), self.cols, |i, j| self.get(perm[i], j))
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        self.iter_rows()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Writes a CSV whose first column holds `row_ids` under `row_label` and whose
    /// remaining columns are headed by `col_ids`.
    pub fn write_csv<W: Write>(&self, w: W, row_label: &str, row_ids: &[String], col_ids: &[String]) -> Result<()> {
        if row_ids.len() != self.rows || col_ids.len() != self.cols {
            return Err(Error::invalid("matrix ids do not match its shape"));
        }
        let mut w = csv::Writer::from_writer(w);
        let mut header = Vec::with_capacity(self.cols + 1);
        header.push(row_label.to_string());
        header.extend(col_ids.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in row_ids.iter().zip(self.iter_rows()) {
            let mut rec = Vec::with_capacity(self.cols + 1);
            rec.push(id.clone());
            rec.extend(row.iter().map(|x| format_float(*x)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("matrix csv", e))?;
        Ok(())
    }

    /// Reads a CSV written by [`Matrix::write_csv`], returning the row ids,
    /// column ids and values.
    pub fn read_csv<R: Read>(r: R) -> Result<(Vec<String>, Vec<String>, Matrix)> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let col_ids: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut row_ids = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            row_ids.push(rec.get(0).unwrap_or_default().to_string());
            let vals = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::invalid(format!("bad number `{s}` in matrix csv: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(vals);
        }
        let m = if rows.is_empty() {
            Matrix::zeros(0, col_ids.len())
        } else {
            Matrix::from_rows(rows)?
        };
        if m.cols != col_ids.len() {
            return Err(Error::invalid("matrix csv rows do not match header"));
        }
        Ok((row_ids, col_ids, m))
    }
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let m = Matrix::from_rows(vec![vec![0.1, 1.0 / 3.0], vec![1e-300, 2.5]]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf, "row", &["a".into(), "b".into()], &["x".into(), "y".into()])
            .unwrap();
        let (rows, cols, back) = Matrix::read_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, ["a", "b"]);
        assert_eq!(cols, ["x", "y"]);
        assert_eq!(back, m);
    }

    #[test]
    fn permutations() {
        let m = Matrix::from_rows(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(m.permute_cols(&[2, 0, 1]).row(0), [3.0, 1.0, 2.0]);
    }
}
