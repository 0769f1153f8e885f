//! Exponential discriminant analysis support: within- and between-class
//! scatter factors of labeled data, and their matrix exponentials in factored
//! form through `exp(H Hᵀ) = I + H phi_1(Hᵀ H) Hᵀ`.

use crate::core::{ComputationError, DenseMatrix, Result, SparseMatrix};
use crate::lowrank::{build_phi_family, LowRankPhiFamily};
use crate::scr::ScrFactors;

/// Labeled samples: one column per sample, integer class labels.
#[derive(Debug, Clone)]
pub struct LabeledData {
    data: DenseMatrix,
    labels: Vec<usize>,
    class_count: usize,
}

impl LabeledData {
    /// Wraps a feature matrix (n features by m samples) and per-sample class
    /// labels. With `scale_columns` (the default preprocessing) every nonzero
    /// sample is scaled by its 2-norm. Every class in `0..K` must be
    /// nonempty, where `K = max(label) + 1`.
    pub fn new(data: DenseMatrix, labels: Vec<usize>, scale_columns: bool) -> Result<Self> {
        if labels.len() != data.cols() {
            return Err(ComputationError::DimensionMismatch(format!(
                "{} samples but {} labels",
                data.cols(),
                labels.len()
            )));
        }
        if labels.is_empty() {
            return Err(ComputationError::DimensionMismatch(
                "no samples given".into(),
            ));
        }
        let class_count = labels.iter().copied().max().unwrap() + 1;
        let mut counts = vec![0usize; class_count];
        for &l in &labels {
            counts[l] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(ComputationError::DimensionMismatch(format!(
                "class {empty} has no samples"
            )));
        }
        let mut data = data;
        if scale_columns {
            for j in 0..data.cols() {
                let norm = data.col(j).iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for v in data.col_mut(j) {
                        *v /= norm;
                    }
                }
            }
        }
        Ok(Self {
            data,
            labels,
            class_count,
        })
    }

    pub fn features(&self) -> usize {
        self.data.rows()
    }

    pub fn samples(&self) -> usize {
        self.data.cols()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// The scatter-matrix factors: `S_B = H_B H_Bᵀ` and `S_W = H_W H_Wᵀ`.
#[derive(Debug, Clone)]
pub struct ScatterFactors {
    /// n-by-K between-class factor, column j is `sqrt(m_j) (c_j - c)`.
    pub h_b: DenseMatrix,
    /// n-by-m within-class factor: each sample centered by its class centroid.
    pub h_w: DenseMatrix,
}

/// Forms the scatter factors: per-class centroids `c_j`, the global centroid
/// `c`, `H_W` as the class-centered data, and `H_B` with columns
/// `sqrt(m_j) (c_j - c)`.
pub fn scatter_factors(d: &LabeledData) -> Result<ScatterFactors> {
    let n = d.features();
    let m = d.samples();
    let k = d.class_count();
    let mut centroids = DenseMatrix::zeros(n, k);
    let mut counts = vec![0usize; k];
    for (j, &label) in d.labels().iter().enumerate() {
        counts[label] += 1;
        let col = d.data().col(j);
        for (acc, &v) in centroids.col_mut(label).iter_mut().zip(col) {
            *acc += v;
        }
    }
    for (label, &count) in counts.iter().enumerate() {
        for v in centroids.col_mut(label) {
            *v /= count as f64;
        }
    }
    let mut global = vec![0.0; n];
    for j in 0..m {
        for (g, &v) in global.iter_mut().zip(d.data().col(j)) {
            *g += v;
        }
    }
    for g in global.iter_mut() {
        *g /= m as f64;
    }

    let mut h_w = DenseMatrix::zeros(n, m);
    for (j, &label) in d.labels().iter().enumerate() {
        let centroid = centroids.col(label);
        let src = d.data().col(j);
        for ((dst, &v), &c) in h_w.col_mut(j).iter_mut().zip(src).zip(centroid) {
            *dst = v - c;
        }
    }
    let mut h_b = DenseMatrix::zeros(n, k);
    for label in 0..k {
        let weight = (counts[label] as f64).sqrt();
        let centroid = centroids.col(label);
        for ((dst, &c_j), &c) in h_b.col_mut(label).iter_mut().zip(centroid).zip(&global) {
            *dst = weight * (c_j - c);
        }
    }
    Ok(ScatterFactors { h_b, h_w })
}

/// Factored exponential of a scatter matrix: for an n-by-k factor `H`,
/// returns the family representation of `exp(H Hᵀ)` with `X = Y = H`,
/// `T = I`, `Z = HᵀH`, so materializing order 0 yields
/// `I + H phi_1(HᵀH) Hᵀ`. Costs `O(k³ + n k²)` instead of a dense n-by-n
/// exponential.
pub fn exp_scatter(h: &DenseMatrix) -> Result<LowRankPhiFamily> {
    let k = h.cols();
    let sparse = SparseMatrix::from_dense(h);
    let factors = ScrFactors::from_parts(
        sparse.clone(),
        DenseMatrix::identity(k),
        sparse,
        0.0,
        0.0,
    )?;
    build_phi_family(&factors, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowrank::materialize;
    use crate::phikernel::expm_dense;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_data(n: usize, per_class: &[usize], seed: u64, scale: bool) -> LabeledData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m: usize = per_class.iter().sum();
        let mut labels = Vec::with_capacity(m);
        for (class, &count) in per_class.iter().enumerate() {
            labels.extend(std::iter::repeat(class).take(count));
        }
        let data = DenseMatrix::from_fn(n, m, |_, j| {
            // Separate the class clouds a little.
            labels[j] as f64 * 0.5 + rng.gen_range(-1.0..1.0)
        });
        LabeledData::new(data, labels, scale).unwrap()
    }

    #[test]
    fn one_sample_per_class_centers_to_zero() {
        let d = toy_data(6, &[1, 1, 1], 1, false);
        let s = scatter_factors(&d).unwrap();
        assert!(s.h_w.frobenius_norm() < 1e-14);
    }

    #[test]
    fn single_class_has_zero_between_scatter() {
        let d = toy_data(5, &[4], 2, false);
        let s = scatter_factors(&d).unwrap();
        assert!(s.h_b.frobenius_norm() < 1e-13);
    }

    #[test]
    fn within_class_columns_sum_to_zero() {
        let d = toy_data(7, &[3, 4, 2], 3, true);
        let s = scatter_factors(&d).unwrap();
        let mut start = 0;
        for &count in &[3usize, 4, 2] {
            let mut sums = vec![0.0; 7];
            for j in start..start + count {
                for (acc, &v) in sums.iter_mut().zip(s.h_w.col(j)) {
                    *acc += v;
                }
            }
            let dev = sums.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(dev <= 1e-12, "class starting at {start}: {dev}");
            start += count;
        }
    }

    #[test]
    fn scatter_decomposition_matches_total() {
        let d = toy_data(10, &[3, 3, 3], 4, false);
        let s = scatter_factors(&d).unwrap();
        let sb = s.h_b.matmul(&s.h_b.transpose()).unwrap();
        let sw = s.h_w.matmul(&s.h_w.transpose()).unwrap();
        // Total scatter oracle: sum over samples of (a - c)(a - c)ᵀ.
        let m = d.samples();
        let n = d.features();
        let mut global = vec![0.0; n];
        for j in 0..m {
            for (g, &v) in global.iter_mut().zip(d.data().col(j)) {
                *g += v;
            }
        }
        for g in global.iter_mut() {
            *g /= m as f64;
        }
        let mut total = DenseMatrix::zeros(n, n);
        for j in 0..m {
            let col = d.data().col(j);
            for q in 0..n {
                for p in 0..n {
                    total[(p, q)] += (col[p] - global[p]) * (col[q] - global[q]);
                }
            }
        }
        let dev = sb.add(&sw).sub(&total).frobenius_norm();
        assert!(dev <= 1e-12 * total.frobenius_norm().max(1.0), "{dev}");
    }

    #[test]
    fn labels_validated() {
        let data = DenseMatrix::zeros(3, 2);
        assert!(LabeledData::new(data.clone(), vec![0], false).is_err());
        // class 1 empty: labels {0, 2}
        assert!(LabeledData::new(data, vec![0, 2], false).is_err());
    }

    #[test]
    fn exp_of_zero_factor_is_identity() {
        let fam = exp_scatter(&DenseMatrix::zeros(5, 2)).unwrap();
        let e = materialize(&fam, 0).unwrap();
        assert!(e.sub(&DenseMatrix::identity(5)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn exp_of_unit_column() {
        let mut h = DenseMatrix::zeros(4, 1);
        h[(0, 0)] = 1.0;
        let fam = exp_scatter(&h).unwrap();
        let e = materialize(&fam, 0).unwrap();
        assert!((e[(0, 0)] - std::f64::consts::E).abs() < 1e-13);
        for i in 1..4 {
            assert!((e[(i, i)] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn factored_exponential_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = DenseMatrix::from_fn(120, 12, |_, _| rng.gen_range(-0.4..0.4));
        let fam = exp_scatter(&h).unwrap();
        let fast = materialize(&fam, 0).unwrap();
        let dense = expm_dense(&h.matmul(&h.transpose()).unwrap()).unwrap();
        let rel = fast.sub(&dense).frobenius_norm() / dense.frobenius_norm();
        assert!(rel <= 1e-12, "{rel}");
    }

    #[test]
    fn exponential_is_symmetric_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = DenseMatrix::from_fn(80, 8, |_, _| rng.gen_range(-0.5..0.5));
        let fam = exp_scatter(&h).unwrap();
        let e = materialize(&fam, 0).unwrap();
        let asym = e.sub(&e.transpose()).frobenius_norm();
        assert!(asym <= 1e-12 * e.frobenius_norm());
        // exp(H Hᵀ) >= I: Cholesky of (E - (1 - 1e-8) I) must succeed.
        let n = e.rows();
        let mut shifted = e.clone();
        for i in 0..n {
            shifted[(i, i)] -= 1.0 - 1e-8;
        }
        let nm = nalgebra::DMatrix::from_column_slice(n, n, shifted.entries());
        assert!(nalgebra::Cholesky::new(nm).is_some());
    }
}
