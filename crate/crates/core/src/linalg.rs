//! Row-major dense and CSR sparse matrices with the handful of row kernels
//! the SVM solver needs.

use crate::error::{DciError, Result};

/// Read access to a matrix one row at a time.
pub trait RowMatrix: Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    /// `dot(row i, w[..n_cols])`.
    fn row_dot(&self, i: usize, w: &[f64]) -> f64;
    /// `w[..n_cols] += a * row i`.
    fn row_axpy(&self, i: usize, a: f64, w: &mut [f64]);
    fn row_sq_norm(&self, i: usize) -> f64;
    fn all_finite(&self) -> bool;
    /// A new matrix made of the given rows, in order.
    fn select_rows(&self, rows: &[usize]) -> Self
    where
        Self: Sized;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_flat(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(DciError::Argument(format!(
                "{} values cannot fill a {n_rows}x{n_cols} matrix",
                data.len()
            )));
        }
        Ok(Self { n_rows, n_cols, data })
    }

    /// All rows must have the same length. An empty slice gives a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(DciError::Argument(format!(
                    "row {i} has {} columns, expected {n_cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            n_rows: rows.len(),
            n_cols,
            data,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on zero width.
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != other.n_cols {
            return Err(DciError::Argument(format!(
                "cannot stack {} and {} columns",
                self.n_cols, other.n_cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(DenseMatrix {
            n_rows: self.n_rows + other.n_rows,
            n_cols: self.n_cols,
            data,
        })
    }
}

impl RowMatrix for DenseMatrix {
    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn n_cols(&self) -> usize {
        self.n_cols
    }

    fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        self.row(i).iter().zip(w).map(|(a, b)| a * b).sum()
    }

    fn row_axpy(&self, i: usize, a: f64, w: &mut [f64]) {
        for (wj, xj) in w.iter_mut().zip(self.row(i)) {
            *wj += a * xj;
        }
    }

    fn row_sq_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|v| v * v).sum()
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            data,
        }
    }
}

/// Compressed sparse rows; column indices within a row are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a row of `(column, value)` pairs sorted by column.
    pub fn push_row<I>(&mut self, entries: I) -> Result<()>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let start = self.indices.len();
        for (c, v) in entries {
            if c as usize >= self.n_cols {
                return Err(DciError::Argument(format!(
                    "column {c} outside matrix width {}",
                    self.n_cols
                )));
            }
            if self.indices.len() > start && *self.indices.last().unwrap() >= c {
                return Err(DciError::Argument("row entries must be sorted by column".into()));
            }
            self.indices.push(c);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
        Ok(())
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }
}

impl RowMatrix for SparseMatrix {
    fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    fn n_cols(&self) -> usize {
        self.n_cols
    }

    fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(&c, v)| v * w[c as usize]).sum()
    }

    fn row_axpy(&self, i: usize, a: f64, w: &mut [f64]) {
        let (idx, val) = self.row(i);
        for (&c, v) in idx.iter().zip(val) {
            w[c as usize] += a * v;
        }
    }

    fn row_sq_norm(&self, i: usize) -> f64 {
        self.row(i).1.iter().map(|v| v * v).sum()
    }

    fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn select_rows(&self, rows: &[usize]) -> Self {
        let mut out = SparseMatrix::new(self.n_cols);
        for &r in rows {
            let (idx, val) = self.row(r);
            out.indices.extend_from_slice(idx);
            out.values.extend_from_slice(val);
            out.indptr.push(out.indices.len());
        }
        out
    }
}

pub fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v {
            *x /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse_agree() {
        let dense = DenseMatrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0]]).unwrap();
        let mut sparse = SparseMatrix::new(3);
        sparse.push_row([(0, 1.0), (2, 2.0)]).unwrap();
        sparse.push_row([(1, 3.0)]).unwrap();
        let w = [0.5, -1.0, 2.0];
        for i in 0..2 {
            assert_eq!(dense.row_dot(i, &w), sparse.row_dot(i, &w));
            assert_eq!(dense.row_sq_norm(i), sparse.row_sq_norm(i));
        }
        let (mut a, mut b) = (vec![0.0; 3], vec![0.0; 3]);
        dense.row_axpy(0, 2.0, &mut a);
        sparse.row_axpy(0, 2.0, &mut b);
        assert_eq!(a, b);
        assert_eq!(dense.select_rows(&[1]).row(0), &[0.0, 3.0, 0.0]);
        assert_eq!(sparse.select_rows(&[1, 0]).row(1).0, &[0, 2]);
    }

    #[test]
    fn sparse_rows_validate() {
        let mut m = SparseMatrix::new(2);
        assert!(m.push_row([(2, 1.0)]).is_err());
        assert!(m.push_row([(1, 1.0), (0, 1.0)]).is_err());
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(DenseMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn zero_vector_stays_zero() {
        let mut v = [0.0, 0.0];
        l2_normalize(&mut v);
        assert_eq!(v, [0.0, 0.0]);
    }
}
