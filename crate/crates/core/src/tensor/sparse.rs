//! Compressed sparse matrices used for incidence-structure products.
//!
//! Each matrix keeps both a row-compressed and a column-compressed view
//! so that `A·X` and `Aᵀ·Y` are both cheap; the transpose product is
//! what the backward pass of a sparse-dense matmul needs.

use super::matrix::Matrix;

#[derive(Clone, Debug)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    // CSR view
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    row_val: Vec<f64>,
    // CSC view of the same entries
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_val: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets. Duplicate coordinates are
    /// summed; zero values are kept out of the structure.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .iter()
            .filter(|(_, _, v)| *v != 0.0)
            .copied()
            .collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        // merge duplicates
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            assert!(r < rows && c < cols, "triplet out of bounds");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }

        let mut row_ptr = vec![0usize; rows + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx: Vec<usize> = merged.iter().map(|&(_, c, _)| c).collect();
        let row_val: Vec<f64> = merged.iter().map(|&(_, _, v)| v).collect();

        let mut by_col = merged;
        by_col.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; cols + 1];
        for &(_, c, _) in &by_col {
            col_ptr[c + 1] += 1;
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let row_idx: Vec<usize> = by_col.iter().map(|&(r, _, _)| r).collect();
        let col_val: Vec<f64> = by_col.iter().map(|&(_, _, v)| v).collect();

        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            row_val,
            col_ptr,
            row_idx,
            col_val,
        }
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &triplets)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.row_val.len()
    }

    /// Entries of row `r` as (col, value) pairs.
    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .zip(&self.row_val[span])
            .map(|(&c, &v)| (c, v))
    }

    /// self (m×k) × x (k×n), dense result.
    pub fn matmul_dense(&self, x: &Matrix) -> Matrix {
        assert_eq!(self.cols, x.rows(), "spmm inner dim");
        let n = x.cols();
        let mut out = Matrix::zeros(self.rows, n);
        for i in 0..self.rows {
            let out_row = out.row_mut(i);
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (c, v) = (self.col_idx[idx], self.row_val[idx]);
                let x_row = x.row(c);
                for (o, &b) in out_row.iter_mut().zip(x_row) {
                    *o += v * b;
                }
            }
        }
        out
    }

    /// selfᵀ (k×m) × y (m×n), dense result, computed from the CSC view.
    pub fn transpose_matmul_dense(&self, y: &Matrix) -> Matrix {
        assert_eq!(self.rows, y.rows(), "spmm^T inner dim");
        let n = y.cols();
        let mut out = Matrix::zeros(self.cols, n);
        for j in 0..self.cols {
            let out_row = out.row_mut(j);
            for idx in self.col_ptr[j]..self.col_ptr[j + 1] {
                let (r, v) = (self.row_idx[idx], self.col_val[idx]);
                let y_row = y.row(r);
                for (o, &b) in out_row.iter_mut().zip(y_row) {
                    *o += v * b;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (c, v) in self.row_entries(i) {
                out.set(i, c, v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spmm_matches_dense() {
        let sp = SparseMatrix::from_triplets(3, 2, &[(0, 0, 2.0), (1, 1, -1.0), (2, 0, 0.5)]);
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let got = sp.matmul_dense(&x);
        let want = sp.to_dense().matmul(&x);
        assert_eq!(got, want);
    }

    #[test]
    fn transpose_product_matches_dense() {
        let sp = SparseMatrix::from_triplets(3, 2, &[(0, 0, 2.0), (1, 1, -1.0), (2, 0, 0.5)]);
        let y = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]);
        let got = sp.transpose_matmul_dense(&y);
        assert_eq!(got.shape(), (2, 1));
        assert_eq!(got.get(0, 0), 2.0 + 1.5);
        assert_eq!(got.get(1, 0), -2.0);
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let sp = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0)]);
        assert_eq!(sp.nnz(), 1);
        assert_eq!(sp.to_dense().get(0, 0), 3.0);
    }

    #[test]
    fn identity_roundtrip() {
        let id = SparseMatrix::identity(4);
        let x = Matrix::from_rows(&[
            vec![1.0, 2.0],
            vec![3.0, 4.0],
            vec![5.0, 6.0],
            vec![7.0, 8.0],
        ]);
        assert_eq!(id.matmul_dense(&x), x);
    }
}
