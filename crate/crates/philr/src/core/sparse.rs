//! Compressed-sparse-column matrices.
//!
//! Column extraction is the hot path of the quasi-Gram-Schmidt selection, so
//! storage is compressed by column; row access goes through an explicit
//! transpose.

use super::dense::DenseMatrix;
use super::error::{ComputationError, Result};

/// Real sparse matrix in CSC layout.
///
/// Invariants enforced on construction: column pointers monotone with length
/// `cols + 1`, row indices strictly increasing within each column and below
/// `rows`, stored values nonzero and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != cols + 1 || col_ptr[0] != 0 || *col_ptr.last().unwrap() != values.len()
        {
            return Err(ComputationError::DimensionMismatch(format!(
                "column pointer array malformed for {rows}x{cols} matrix"
            )));
        }
        if row_idx.len() != values.len() {
            return Err(ComputationError::DimensionMismatch(
                "row index and value arrays differ in length".into(),
            ));
        }
        for j in 0..cols {
            if col_ptr[j] > col_ptr[j + 1] {
                return Err(ComputationError::DimensionMismatch(format!(
                    "column pointers decrease at column {j}"
                )));
            }
            let mut prev = None;
            for k in col_ptr[j]..col_ptr[j + 1] {
                let i = row_idx[k];
                if i >= rows {
                    return Err(ComputationError::DimensionMismatch(format!(
                        "row index {i} out of bounds in column {j}"
                    )));
                }
                if let Some(p) = prev {
                    if i <= p {
                        return Err(ComputationError::DimensionMismatch(format!(
                            "row indices not strictly increasing in column {j}"
                        )));
                    }
                }
                prev = Some(i);
                let v = values[k];
                if !v.is_finite() {
                    return Err(ComputationError::NonFiniteInput(format!(
                        "sparse entry ({i},{j}) = {v}"
                    )));
                }
                if v == 0.0 {
                    return Err(ComputationError::NonFiniteInput(format!(
                        "explicit zero stored at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds from (row, col, value) triplets; duplicate positions are summed,
    /// entries that cancel to zero are dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(ComputationError::DimensionMismatch(format!(
                    "triplet ({i},{j}) out of bounds for {rows}x{cols}"
                )));
            }
            if !v.is_finite() {
                return Err(ComputationError::NonFiniteInput(format!(
                    "triplet ({i},{j}) = {v}"
                )));
            }
            sorted.push((j, i, v));
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        let mut k = 0;
        while k < sorted.len() {
            let (j, i, mut v) = sorted[k];
            k += 1;
            while k < sorted.len() && sorted[k].0 == j && sorted[k].1 == i {
                v += sorted[k].2;
                k += 1;
            }
            if v != 0.0 {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
            }
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Self::new(rows, cols, col_ptr, row_idx, values)
    }

    /// Densifies `m` keeping exact nonzeros.
    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut col_ptr = vec![0usize; m.cols() + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for j in 0..m.cols() {
            for (i, &v) in m.col(j).iter().enumerate() {
                if v != 0.0 {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr[j + 1] = values.len();
        }
        Self {
            rows: m.rows(),
            cols: m.cols(),
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    /// Iterates `(row, col, value)` in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.cols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.rows + 1];
        for &i in &self.row_idx {
            counts[i + 1] += 1;
        }
        for i in 0..self.rows {
            counts[i + 1] += counts[i];
        }
        let mut col_ptr = counts.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for j in 0..self.cols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                let dst = counts[i];
                row_idx[dst] = j;
                values[dst] = v;
                counts[i] += 1;
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    /// Extracts the named columns verbatim (values keep their exact bits).
    pub fn extract_columns(&self, indices: &[usize]) -> Result<SparseMatrix> {
        let mut col_ptr = vec![0usize; indices.len() + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for (k, &j) in indices.iter().enumerate() {
            if j >= self.cols {
                return Err(ComputationError::DimensionMismatch(format!(
                    "column {j} out of bounds"
                )));
            }
            let (rows, vals) = self.col(j);
            row_idx.extend_from_slice(rows);
            values.extend_from_slice(vals);
            col_ptr[k + 1] = values.len();
        }
        Ok(SparseMatrix {
            rows: self.rows,
            cols: indices.len(),
            col_ptr,
            row_idx,
            values,
        })
    }

    /// `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(ComputationError::DimensionMismatch(format!(
                "sparse matvec {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for j in 0..self.cols {
            let x = v[j];
            if x == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            for (&i, &a) in rows.iter().zip(vals) {
                out[i] += a * x;
            }
        }
        Ok(out)
    }

    /// `selfᵀ * v`.
    pub fn matvec_t(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(ComputationError::DimensionMismatch(format!(
                "sparse transposed matvec {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.cols)
            .map(|j| {
                let (rows, vals) = self.col(j);
                rows.iter().zip(vals).map(|(&i, &a)| a * v[i]).sum()
            })
            .collect())
    }

    /// Sparse-by-dense product; cost proportional to `nnz(self) * rhs.cols()`.
    pub fn mul_dense(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows() {
            return Err(ComputationError::DimensionMismatch(format!(
                "sparse matmul {}x{} by {}x{}",
                self.cols,
                self.rows,
                rhs.rows(),
                rhs.cols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols());
        for jb in 0..rhs.cols() {
            let rhs_col = rhs.col(jb);
            let out_col = out.col_mut(jb);
            for (j, &x) in rhs_col.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let range = self.col_ptr[j]..self.col_ptr[j + 1];
                for (&i, &a) in self.row_idx[range.clone()].iter().zip(&self.values[range]) {
                    out_col[i] += a * x;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * rhs` for dense `rhs`.
    pub fn t_mul_dense(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != rhs.rows() {
            return Err(ComputationError::DimensionMismatch(format!(
                "sparse transposed matmul {}x{} by {}x{}",
                self.rows,
                self.cols,
                rhs.rows(),
                rhs.cols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.cols, rhs.cols());
        for jb in 0..rhs.cols() {
            let rhs_col = rhs.col(jb);
            let out_col = out.col_mut(jb);
            for (j, o) in out_col.iter_mut().enumerate() {
                let (rows, vals) = self.col(j);
                *o = rows.iter().zip(vals).map(|(&i, &a)| a * rhs_col[i]).sum();
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Squared 2-norms of all columns.
    pub fn column_norms_sq(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| self.col(j).1.iter().map(|v| v * v).sum())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SparseMatrix {
        // [1 0 2]
        // [0 3 0]
        // [4 0 5]
        SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 1.0), (2, 0, 4.0), (1, 1, 3.0), (0, 2, 2.0), (2, 2, 5.0)],
        )
        .unwrap()
    }

    #[test]
    fn invariants_rejected() {
        assert!(SparseMatrix::new(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(SparseMatrix::new(2, 2, vec![0, 1, 1], vec![5], vec![1.0]).is_err());
        assert!(SparseMatrix::new(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 2.0]).is_err());
        assert!(SparseMatrix::new(2, 2, vec![0, 1, 1], vec![0], vec![0.0]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, -1.0), (1, 1, 2.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.to_dense()[(1, 1)], 2.0);
    }

    #[test]
    fn transpose_roundtrip() {
        let m = small();
        let t = m.transpose();
        assert_eq!(t.to_dense(), m.to_dense().transpose());
        assert_eq!(t.transpose().to_dense(), m.to_dense());
    }

    #[test]
    fn products_match_dense() {
        let m = small();
        let d = m.to_dense();
        let rhs = DenseMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 - 1.5);
        assert_eq!(m.mul_dense(&rhs).unwrap(), d.matmul(&rhs).unwrap());
        assert_eq!(m.t_mul_dense(&rhs).unwrap(), d.transpose().matmul(&rhs).unwrap());
        let v = vec![1.0, -2.0, 0.5];
        assert_eq!(m.matvec(&v).unwrap(), d.matvec(&v).unwrap());
        assert_eq!(m.matvec_t(&v).unwrap(), d.matvec_t(&v).unwrap());
    }

    #[test]
    fn extract_columns_is_verbatim() {
        let m = small();
        let x = m.extract_columns(&[2, 0]).unwrap();
        let (rows, vals) = x.col(0);
        let (orig_rows, orig_vals) = m.col(2);
        assert_eq!(rows, orig_rows);
        assert!(vals
            .iter()
            .zip(orig_vals)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
