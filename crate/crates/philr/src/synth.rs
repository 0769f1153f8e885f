//! Seeded synthetic test matrices: dense-ish sparse matrices with controlled
//! singular spectra (geometric or power-law decay) and random factored
//! low-rank instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core::{qr_thin, DenseMatrix, Result, SparseMatrix};
use crate::scr::ScrFactors;

/// Singular-value decay law for [`decaying_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spectrum {
    /// `sigma_j = rho^{-j}`, `rho > 1`.
    Geometric { rho: f64 },
    /// `sigma_j = j^{-alpha}`, `alpha > 1`.
    PowerLaw { alpha: f64 },
}

impl Spectrum {
    pub fn sigma(&self, j: usize) -> f64 {
        match *self {
            Spectrum::Geometric { rho } => rho.powi(-(j as i32 + 1)),
            Spectrum::PowerLaw { alpha } => ((j + 1) as f64).powf(-alpha),
        }
    }
}

/// Builds `U diag(sigma) Vᵀ` with random orthogonal `U`, `V` and the given
/// spectrum, then drops entries below `threshold` times the largest entry.
/// The result is reproducible from the seed.
pub fn decaying_spectrum(
    n: usize,
    spectrum: Spectrum,
    threshold: f64,
    seed: u64,
) -> Result<SparseMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g1 = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let g2 = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let (u, _) = qr_thin(&g1)?;
    let (v, _) = qr_thin(&g2)?;
    let mut ud = u;
    for j in 0..n {
        let s = spectrum.sigma(j);
        for x in ud.col_mut(j) {
            *x *= s;
        }
    }
    let dense = ud.matmul(&v.transpose())?;
    let cutoff = threshold * dense.max_abs();
    let mut triplets = Vec::new();
    for j in 0..n {
        for (i, &x) in dense.col(j).iter().enumerate() {
            if x.abs() > cutoff {
                triplets.push((i, j, x));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets)
}

/// Random factored instance `X T Yᵀ` with sparse n-by-r factors and the
/// densified product scaled to the requested spectral-ish norm.
pub fn random_factored(
    n: usize,
    r: usize,
    density: f64,
    target_norm: f64,
    seed: u64,
) -> Result<ScrFactors> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_sparse_factor(n, r, density, &mut rng)?;
    let y = random_sparse_factor(n, r, density, &mut rng)?;
    let t = DenseMatrix::from_fn(r, r, |_, _| rng.gen_range(-1.0..1.0));
    let unscaled = ScrFactors::from_parts(x, t, y, 0.0, 0.0)?;
    let norm = unscaled.to_dense()?.frobenius_norm().max(1e-300);
    ScrFactors::from_parts(
        unscaled.x.clone(),
        unscaled.t.scale(target_norm / norm),
        unscaled.y.clone(),
        0.0,
        0.0,
    )
}

fn random_sparse_factor(
    n: usize,
    r: usize,
    density: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SparseMatrix> {
    let mut triplets = Vec::new();
    for j in 0..r {
        // Guarantee full column rank structurally: one certain entry per
        // column on a distinct row, plus random fill.
        let anchor = rng.gen_range(0..n);
        triplets.push((anchor, j, rng.gen_range(0.5..1.5)));
        for i in 0..n {
            if i != anchor && rng.gen_bool(density) {
                triplets.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    SparseMatrix::from_triplets(n, r, &triplets)
}

/// Random dense square matrix scaled to a target Frobenius norm.
pub fn random_dense(n: usize, target_norm: f64, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let norm = g.frobenius_norm().max(1e-300);
    g.scale(target_norm / norm)
}

/// Random labeled data with lightly separated class clouds.
pub fn random_labeled(
    features: usize,
    samples_per_class: usize,
    classes: usize,
    seed: u64,
) -> (DenseMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = samples_per_class * classes;
    let mut labels = Vec::with_capacity(m);
    for class in 0..classes {
        labels.extend(std::iter::repeat(class).take(samples_per_class));
    }
    let offsets: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..features).map(|_| rng.gen_range(-0.5..0.5)).collect())
        .collect();
    let data = DenseMatrix::from_fn(features, m, |i, j| {
        offsets[labels[j]][i] + rng.gen_range(-1.0..1.0)
    });
    (data, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::singular_values;

    #[test]
    fn spectrum_is_respected() {
        let a = decaying_spectrum(40, Spectrum::Geometric { rho: 2.0 }, 0.0, 1).unwrap();
        let sv = singular_values(&a.to_dense()).unwrap();
        for j in 0..6 {
            let expect = 0.5f64.powi(j as i32 + 1);
            assert!(
                (sv[j] - expect).abs() <= 1e-12,
                "sigma_{j} = {} vs {expect}",
                sv[j]
            );
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = decaying_spectrum(30, Spectrum::PowerLaw { alpha: 2.0 }, 1e-8, 7).unwrap();
        let b = decaying_spectrum(30, Spectrum::PowerLaw { alpha: 2.0 }, 1e-8, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn factored_instance_hits_target_norm() {
        let f = random_factored(60, 6, 0.2, 2.5, 3).unwrap();
        let norm = f.to_dense().unwrap().frobenius_norm();
        assert!((norm - 2.5).abs() < 1e-10);
        assert_eq!(f.rank, 6);
    }
}
