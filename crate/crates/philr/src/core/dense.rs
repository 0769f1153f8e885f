//! Column-major dense matrices and the dense factorizations built on them.
//!
//! Column-major storage is deliberate: the sparse column-row machinery selects
//! columns, and every hot loop here walks contiguous columns.

use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use super::error::{ComputationError, Result};

/// Above this many multiply-adds, `matmul` splits the output columns across
/// threads. Each output column is still computed in the sequential order, so
/// parallel and sequential results are bitwise identical.
const PAR_FLOP_THRESHOLD: usize = 1 << 23;

/// Real dense matrix, entries stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from column-major entries, rejecting length mismatches
    /// and non-finite values.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(ComputationError::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(ComputationError::NonFiniteInput(format!(
                "dense matrix entry {bad}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Identity scaled by `alpha`.
    pub fn scaled_identity(n: usize, alpha: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = alpha;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.entries[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.entries[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `self += alpha * other`, entrywise.
    pub fn axpy(&mut self, alpha: f64, other: &DenseMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += alpha * b;
        }
    }

    /// Copies `block` into `self` with its (0,0) entry at `(row, col)`.
    pub fn set_block(&mut self, row: usize, col: usize, block: &DenseMatrix) {
        assert!(row + block.rows <= self.rows && col + block.cols <= self.cols);
        for j in 0..block.cols {
            let src = block.col(j);
            let dst = &mut self.entries
                [(col + j) * self.rows + row..(col + j) * self.rows + row + block.rows];
            dst.copy_from_slice(src);
        }
    }

    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> DenseMatrix {
        assert!(row + rows <= self.rows && col + cols <= self.cols);
        let mut out = DenseMatrix::zeros(rows, cols);
        for j in 0..cols {
            let src = &self.col(col + j)[row..row + rows];
            out.col_mut(j).copy_from_slice(src);
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| self.col(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Matrix product `self * rhs`. Exact floating-point product in
    /// round-to-nearest; large products are split across threads by output
    /// column without changing any per-column accumulation order.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(ComputationError::DimensionMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        let flops = self.rows * self.cols * rhs.cols;
        if flops >= PAR_FLOP_THRESHOLD {
            let rows = self.rows;
            out.entries
                .par_chunks_mut(rows)
                .enumerate()
                .for_each(|(j, out_col)| self.matmul_into_col(rhs, j, out_col));
        } else {
            for (j, out_col) in out.entries.chunks_mut(self.rows).enumerate() {
                self.matmul_into_col(rhs, j, out_col);
            }
        }
        Ok(out)
    }

    /// Sequential reference product; used by tests to pin down the parallel
    /// path bitwise.
    pub fn matmul_seq(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(ComputationError::DimensionMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for (j, out_col) in out.entries.chunks_mut(self.rows).enumerate() {
            self.matmul_into_col(rhs, j, out_col);
        }
        Ok(out)
    }

    fn matmul_into_col(&self, rhs: &DenseMatrix, j: usize, out_col: &mut [f64]) {
        let rhs_col = rhs.col(j);
        for (k, &b) in rhs_col.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            let a_col = self.col(k);
            for (o, &a) in out_col.iter_mut().zip(a_col) {
                *o += b * a;
            }
        }
    }

    /// `self * v` for a vector.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(ComputationError::DimensionMismatch(format!(
                "matvec {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for (k, &b) in v.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(k)) {
                *o += b * a;
            }
        }
        Ok(out)
    }

    /// `selfᵀ * v`.
    pub fn matvec_t(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(ComputationError::DimensionMismatch(format!(
                "transposed matvec {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.cols)
            .map(|j| self.col(j).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve_lu(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if !self.is_square() || self.rows != rhs.rows {
            return Err(ComputationError::DimensionMismatch(format!(
                "lu solve {}x{} with rhs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let n = self.rows;
        let mut lu = self.clone();
        let mut x = rhs.clone();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(ComputationError::SingularFactor(format!(
                    "zero pivot at column {k} in LU solve"
                )));
            }
            if p != k {
                for j in 0..n {
                    self::swap_entries(&mut lu, p, k, j);
                }
                for j in 0..x.cols {
                    self::swap_entries(&mut x, p, k, j);
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let m = lu[(i, k)] / pivot;
                lu[(i, k)] = m;
                if m != 0.0 {
                    for j in k + 1..n {
                        let s = lu[(k, j)];
                        lu[(i, j)] -= m * s;
                    }
                    for j in 0..x.cols {
                        let s = x[(k, j)];
                        x[(i, j)] -= m * s;
                    }
                }
            }
        }
        for j in 0..x.cols {
            for k in (0..n).rev() {
                let mut s = x[(k, j)];
                for i in k + 1..n {
                    s -= lu[(k, i)] * x[(i, j)];
                }
                x[(k, j)] = s / lu[(k, k)];
            }
        }
        Ok(x)
    }
}

fn swap_entries(m: &mut DenseMatrix, a: usize, b: usize, j: usize) {
    let va = m[(a, j)];
    let vb = m[(b, j)];
    m[(a, j)] = vb;
    m[(b, j)] = va;
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[j * self.rows + i]
    }
}

/// Thin Householder QR of a tall matrix: `M = Q R` with `Q` n-by-r
/// orthonormal and `R` r-by-r upper triangular.
///
/// The diagonal of `R` is made nonnegative by column sign flips, so the
/// factorization is deterministic.
pub fn qr_thin(m: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (n, r) = (m.rows(), m.cols());
    if n < r {
        return Err(ComputationError::DimensionMismatch(format!(
            "thin QR needs rows >= cols, got {n}x{r}"
        )));
    }
    // Householder vectors overwrite the lower triangle of a working copy.
    let mut a = m.clone();
    let mut betas = vec![0.0; r];
    for k in 0..r {
        let (head, norm_x) = {
            let col = &a.col(k)[k..];
            let nx = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            (col[0], nx)
        };
        if norm_x == 0.0 {
            betas[k] = 0.0;
            continue;
        }
        let alpha = if head >= 0.0 { -norm_x } else { norm_x };
        // v = x - alpha e1, normalized so v[0] = 1.
        let v0 = head - alpha;
        betas[k] = -v0 / alpha;
        {
            let col = a.col_mut(k);
            col[k] = alpha;
            for i in k + 1..n {
                col[i] /= v0;
            }
        }
        for j in k + 1..r {
            let mut dot = a[(k, j)];
            for i in k + 1..n {
                dot += a[(i, k)] * a[(i, j)];
            }
            let scale = betas[k] * dot;
            a[(k, j)] -= scale;
            for i in k + 1..n {
                let h = a[(i, k)];
                a[(i, j)] -= scale * h;
            }
        }
    }
    // Accumulate the thin Q by applying reflectors to the leading columns of I.
    let mut q = DenseMatrix::zeros(n, r);
    for j in 0..r {
        q[(j, j)] = 1.0;
    }
    for k in (0..r).rev() {
        if betas[k] == 0.0 {
            continue;
        }
        for j in 0..r {
            let mut dot = q[(k, j)];
            for i in k + 1..n {
                dot += a[(i, k)] * q[(i, j)];
            }
            let scale = betas[k] * dot;
            q[(k, j)] -= scale;
            for i in k + 1..n {
                let h = a[(i, k)];
                q[(i, j)] -= scale * h;
            }
        }
    }
    let mut rmat = DenseMatrix::zeros(r, r);
    for j in 0..r {
        for i in 0..=j {
            rmat[(i, j)] = a[(i, j)];
        }
    }
    // Nonnegative-diagonal convention.
    for k in 0..r {
        if rmat[(k, k)] < 0.0 {
            for j in k..r {
                rmat[(k, j)] = -rmat[(k, j)];
            }
            for i in 0..n {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok((q, rmat))
}

/// Solves `R x = b` for upper triangular `R`, overwriting nothing.
pub fn solve_upper(r: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = r.rows();
    if !r.is_square() || b.len() != n {
        return Err(ComputationError::DimensionMismatch(
            "upper triangular solve".into(),
        ));
    }
    let mut x = b.to_vec();
    for k in (0..n).rev() {
        for i in k + 1..n {
            x[k] -= r[(k, i)] * x[i];
        }
        let d = r[(k, k)];
        if d == 0.0 {
            return Err(ComputationError::SingularFactor(format!(
                "zero diagonal at {k} in triangular solve"
            )));
        }
        x[k] /= d;
    }
    Ok(x)
}

/// Solves `Rᵀ x = b` for upper triangular `R` (forward substitution).
pub fn solve_upper_transpose(r: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = r.rows();
    if !r.is_square() || b.len() != n {
        return Err(ComputationError::DimensionMismatch(
            "transposed triangular solve".into(),
        ));
    }
    let mut x = b.to_vec();
    for k in 0..n {
        for i in 0..k {
            x[k] -= r[(i, k)] * x[i];
        }
        let d = r[(k, k)];
        if d == 0.0 {
            return Err(ComputationError::SingularFactor(format!(
                "zero diagonal at {k} in triangular solve"
            )));
        }
        x[k] /= d;
    }
    Ok(x)
}

/// Solves `R X = B` columnwise for upper triangular `R`.
pub fn solve_upper_mat(r: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let x = solve_upper(r, b.col(j))?;
        out.col_mut(j).copy_from_slice(&x);
    }
    Ok(out)
}

/// Solves `Rᵀ X = B` columnwise for upper triangular `R`.
pub fn solve_upper_transpose_mat(r: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let x = solve_upper_transpose(r, b.col(j))?;
        out.col_mut(j).copy_from_slice(&x);
    }
    Ok(out)
}

/// Solves `X S = B` for upper triangular `S` (right division).
pub fn solve_right_upper_mat(s: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    // X S = B  <=>  Sᵀ Xᵀ = Bᵀ.
    Ok(solve_upper_transpose_mat(s, &b.transpose())?.transpose())
}

/// Solves `X Sᵀ = B` for upper triangular `S`.
pub fn solve_right_upper_transpose_mat(s: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(solve_upper_mat(s, &b.transpose())?.transpose())
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ja in 0..a.cols() {
        for ia in 0..a.rows() {
            let v = a[(ia, ja)];
            if v == 0.0 {
                continue;
            }
            for jb in 0..b.cols() {
                for ib in 0..b.rows() {
                    out[(ia * b.rows() + ib, ja * b.cols() + jb)] = v * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Stacks the columns of `m` into one vector.
pub fn vec_of(m: &DenseMatrix) -> Vec<f64> {
    m.entries().to_vec()
}

/// Inverse of [`vec_of`]: reshapes a length `rows*cols` vector columnwise.
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> DenseMatrix {
    assert_eq!(v.len(), rows * cols);
    DenseMatrix {
        rows,
        cols,
        entries: v.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn construction_rejects_non_finite() {
        let err = DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).unwrap_err();
        assert_eq!(err.kind(), crate::core::ErrorKind::NonFiniteInput);
    }

    #[test]
    fn construction_rejects_wrong_length() {
        let err = DenseMatrix::new(2, 2, vec![1.0; 3]).unwrap_err();
        assert_eq!(err.kind(), crate::core::ErrorKind::DimensionMismatch);
    }

    #[test]
    fn matmul_identity_passthrough() {
        let m = seeded(3, 4, 1);
        let id = DenseMatrix::identity(3);
        let p = id.matmul(&m).unwrap();
        assert_eq!(p, m);
    }

    #[test]
    fn matmul_zero_times_anything() {
        let z = DenseMatrix::zeros(2, 3);
        let m = seeded(3, 4, 2);
        let p = z.matmul(&m).unwrap();
        assert_eq!(p, DenseMatrix::zeros(2, 4));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let a = seeded(5, 4, 3);
        let b = seeded(4, 3, 4);
        let p = a.matmul(&b).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += a[(i, k)] * b[(k, j)];
                }
                let denom = s.abs().max(1.0);
                assert!((p[(i, j)] - s).abs() / denom < 1e-14);
            }
        }
    }

    #[test]
    fn parallel_matmul_bitwise_matches_sequential() {
        // 256^3 exceeds the parallel threshold.
        let a = seeded(256, 256, 5);
        let b = seeded(256, 256, 6);
        let p = a.matmul(&b).unwrap();
        let s = a.matmul_seq(&b).unwrap();
        assert!(p
            .entries()
            .iter()
            .zip(s.entries())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn qr_thin_orthonormal_column() {
        let m = DenseMatrix::new(2, 1, vec![3.0, 4.0]).unwrap();
        let (q, r) = qr_thin(&m).unwrap();
        assert!((r[(0, 0)] - 5.0).abs() < 1e-14);
        assert!((q[(0, 0)] - 0.6).abs() < 1e-14);
        assert!((q[(1, 0)] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn qr_thin_reconstructs_and_is_orthonormal() {
        let m = seeded(50, 8, 7);
        let (q, r) = qr_thin(&m).unwrap();
        let qr = q.matmul(&r).unwrap();
        let rel = qr.sub(&m).frobenius_norm() / m.frobenius_norm();
        assert!(rel <= 1e-13, "reconstruction {rel}");
        let qtq = q.transpose().matmul(&q).unwrap();
        let dev = qtq.sub(&DenseMatrix::identity(8)).frobenius_norm();
        assert!(dev <= 1e-12 * 8.0, "orthonormality {dev}");
        for k in 0..8 {
            assert!(r[(k, k)] >= 0.0);
        }
    }

    #[test]
    fn qr_thin_of_orthonormal_is_identity_r() {
        let m = seeded(20, 5, 8);
        let (q, _) = qr_thin(&m).unwrap();
        let (q2, r2) = qr_thin(&q).unwrap();
        let dev = r2.sub(&DenseMatrix::identity(5)).frobenius_norm();
        assert!(dev < 1e-12, "R deviates from I by {dev}");
        let qdev = q2.sub(&q).frobenius_norm();
        assert!(qdev < 1e-12);
    }

    #[test]
    fn lu_solve_roundtrip() {
        let a = seeded(6, 6, 9);
        let x_true = seeded(6, 2, 10);
        let b = a.matmul(&x_true).unwrap();
        let x = a.solve_lu(&b).unwrap();
        assert!(x.sub(&x_true).frobenius_norm() < 1e-10);
    }

    #[test]
    fn triangular_solves_roundtrip() {
        let m = seeded(6, 6, 11);
        let (_, r) = qr_thin(&m).unwrap();
        let b = seeded(6, 3, 12);
        let x = solve_upper_mat(&r, &b).unwrap();
        assert!(r.matmul(&x).unwrap().sub(&b).frobenius_norm() < 1e-9);
        let y = solve_upper_transpose_mat(&r, &b).unwrap();
        assert!(r.transpose().matmul(&y).unwrap().sub(&b).frobenius_norm() < 1e-9);
        let z = solve_right_upper_mat(&r, &b.transpose()).unwrap();
        assert!(z.matmul(&r).unwrap().sub(&b.transpose()).frobenius_norm() < 1e-9);
    }

    #[test]
    fn kron_small_case() {
        let a = DenseMatrix::new(2, 2, vec![1.0, 3.0, 2.0, 4.0]).unwrap();
        let b = DenseMatrix::identity(2);
        let k = kron(&a, &b);
        assert_eq!(k.rows(), 4);
        assert!((k[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((k[(1, 1)] - 1.0).abs() < 1e-15);
        assert!((k[(0, 2)] - 2.0).abs() < 1e-15);
        assert!((k[(2, 0)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn vec_unvec_roundtrip() {
        let m = seeded(3, 4, 13);
        let v = vec_of(&m);
        assert_eq!(unvec(&v, 3, 4), m);
    }
}
