//! The phi-family of a factored matrix `Ã = X T Yᵀ` kept in low-rank form:
//! with `Z = T (YᵀX)`, every member of the family reduces to r-by-r work via
//!
//! ```text
//!     phi_l(X T Yᵀ) = I/l! + X [phi_{l+1}(Z) T] Yᵀ
//! ```
//!
//! so only the two sparse factors and a handful of r-by-r blocks are stored.

use crate::core::{
    norm2_exact_small, qr_thin, ComputationError, DenseMatrix, Result, SparseMatrix,
};
use crate::phikernel::{factorial, phi_family_dense, DENSE_KERNEL_THRESHOLD};
use crate::scr::ScrFactors;

/// Default highest family index, matching the usual `l = 0..4` range.
pub const DEFAULT_FAMILY_ORDER: usize = 4;

/// Lazy representation of `phi_l(Ã)` for `l = 0..p`.
#[derive(Debug, Clone)]
pub struct LowRankPhiFamily {
    p: usize,
    x: SparseMatrix,
    y: SparseMatrix,
    t: DenseMatrix,
    z: DenseMatrix,
    /// `coeff[l] = phi_{l+1}(Z) T`.
    coeff: Vec<DenseMatrix>,
    /// `phi_bare[l] = phi_{l+1}(Z)`, kept for the Fréchet-based estimator.
    phi_bare: Vec<DenseMatrix>,
    r1: DenseMatrix,
    r2: DenseMatrix,
}

impl LowRankPhiFamily {
    pub fn order(&self) -> usize {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.z.rows()
    }

    pub fn dimension(&self) -> usize {
        self.x.rows()
    }

    pub fn x(&self) -> &SparseMatrix {
        &self.x
    }

    pub fn y(&self) -> &SparseMatrix {
        &self.y
    }

    pub fn t(&self) -> &DenseMatrix {
        &self.t
    }

    pub fn z(&self) -> &DenseMatrix {
        &self.z
    }

    /// `phi_{l+1}(Z) T`, the block consumed by materialization and matvecs.
    pub fn coefficient(&self, ell: usize) -> &DenseMatrix {
        &self.coeff[ell]
    }

    /// `phi_{l+1}(Z)` without the trailing `T`.
    pub fn phi_of_z(&self, ell: usize) -> &DenseMatrix {
        &self.phi_bare[ell]
    }

    /// R-factor of the thin QR of `X`.
    pub fn r1(&self) -> &DenseMatrix {
        &self.r1
    }

    /// R-factor of the thin QR of `Y`.
    pub fn r2(&self) -> &DenseMatrix {
        &self.r2
    }
}

/// Builds the family from SCR factors: forms `Z = T (YᵀX)`, evaluates
/// `phi_1(Z) .. phi_{p+1}(Z)` with one augmented exponential, stores
/// `C_l = phi_{l+1}(Z) T`, and caches the R-factors of the thin QR of the
/// densified `X` and `Y` for the norm and condition estimators.
pub fn build_phi_family(f: &ScrFactors, p: usize) -> Result<LowRankPhiFamily> {
    let r = f.rank;
    if r * (p + 2) > DENSE_KERNEL_THRESHOLD {
        return Err(ComputationError::DimensionMismatch(format!(
            "rank {r} with family order {p} exceeds the dense kernel threshold"
        )));
    }
    let ytx = f.y.t_mul_dense(&f.x.to_dense())?;
    let z = f.t.matmul(&ytx)?;
    let fam = phi_family_dense(&z, p + 1)?;
    let mut coeff = Vec::with_capacity(p + 1);
    let mut phi_bare = Vec::with_capacity(p + 1);
    for ell in 0..=p {
        coeff.push(fam.phi(ell + 1).matmul(&f.t)?);
        phi_bare.push(fam.phi(ell + 1).clone());
    }
    let (_, r1) = qr_thin(&f.x.to_dense())?;
    let (_, r2) = qr_thin(&f.y.to_dense())?;
    Ok(LowRankPhiFamily {
        p,
        x: f.x.clone(),
        y: f.y.clone(),
        t: f.t.clone(),
        z,
        coeff,
        phi_bare,
        r1,
        r2,
    })
}

/// Forms `phi_l(Ã) = I/l! + X C_l Yᵀ` as a dense n-by-n matrix.
pub fn materialize(fam: &LowRankPhiFamily, ell: usize) -> Result<DenseMatrix> {
    if ell > fam.p {
        return Err(ComputationError::DimensionMismatch(format!(
            "family holds orders up to {}, requested {ell}",
            fam.p
        )));
    }
    let n = fam.x.rows();
    if n > DENSE_KERNEL_THRESHOLD {
        return Err(ComputationError::DimensionMismatch(format!(
            "materializing a {n}x{n} matrix exceeds the dense threshold"
        )));
    }
    let xc = fam.x.mul_dense(&fam.coeff[ell])?;
    let mut out = xc.matmul(&fam.y.to_dense().transpose())?;
    let scale = 1.0 / factorial(ell);
    for i in 0..n {
        out[(i, i)] += scale;
    }
    Ok(out)
}

/// Applies `phi_l(Ã)` to a vector in factored form:
/// `v/l! + X (C_l (Yᵀ v))`, costing `O(nnz(X) + nnz(Y) + r²)`.
pub fn apply(fam: &LowRankPhiFamily, ell: usize, v: &[f64]) -> Result<Vec<f64>> {
    if ell > fam.p {
        return Err(ComputationError::DimensionMismatch(format!(
            "family holds orders up to {}, requested {ell}",
            fam.p
        )));
    }
    if v.len() != fam.x.rows() {
        return Err(ComputationError::DimensionMismatch(format!(
            "vector of length {} applied to dimension {}",
            v.len(),
            fam.x.rows()
        )));
    }
    let w = fam.y.matvec_t(v)?;
    let cw = fam.coeff[ell].matvec(&w)?;
    let mut out = fam.x.matvec(&cw)?;
    let scale = 1.0 / factorial(ell);
    for (o, &vi) in out.iter_mut().zip(v) {
        *o += scale * vi;
    }
    Ok(out)
}

/// The computable norm surrogate `eta_l = ||R1 [phi_{l+1}(Z) T] R2ᵀ||_2`
/// together with the sandwich `|eta_l - 1/l!| <= ||phi_l(Ã)||_2 <= eta_l + 1/l!`.
pub fn norm_estimate_eta(fam: &LowRankPhiFamily, ell: usize) -> Result<(f64, f64, f64)> {
    if ell > fam.p {
        return Err(ComputationError::DimensionMismatch(format!(
            "family holds orders up to {}, requested {ell}",
            fam.p
        )));
    }
    let eta = norm2_exact_small(&sandwich(fam, &fam.coeff[ell])?)?;
    let inv_fact = 1.0 / factorial(ell);
    Ok((eta, (eta - inv_fact).abs(), eta + inv_fact))
}

/// `R1 M R2ᵀ` for an r-by-r block `M`.
pub(crate) fn sandwich(fam: &LowRankPhiFamily, m: &DenseMatrix) -> Result<DenseMatrix> {
    fam.r1.matmul(m)?.matmul(&fam.r2.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phikernel::phi_taylor_oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn factored_instance(n: usize, r: usize, seed: u64) -> ScrFactors {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DenseMatrix::from_fn(n, r, |_, _| {
            if rng.gen_bool(0.2) {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let y = DenseMatrix::from_fn(n, r, |_, _| {
            if rng.gen_bool(0.2) {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let t = DenseMatrix::from_fn(r, r, |_, _| rng.gen_range(-1.0..1.0));
        // Scale so the densified product has a modest norm.
        let xs = SparseMatrix::from_dense(&x);
        let ys = SparseMatrix::from_dense(&y);
        let f = ScrFactors::from_parts(xs, t, ys, 0.0, 0.0).unwrap();
        let norm = f.to_dense().unwrap().frobenius_norm().max(1e-12);
        let scale = 3.0 / norm;
        ScrFactors::from_parts(f.x.clone(), f.t.scale(scale), f.y.clone(), 0.0, 0.0).unwrap()
    }

    fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.sub(b).frobenius_norm() / b.frobenius_norm().max(1e-300)
    }

    #[test]
    fn rank_one_scalar_reduction() {
        // A = e1 e1ᵀ: exp has (0,0) entry e, other diagonal entries 1.
        let e1 = SparseMatrix::from_triplets(4, 1, &[(0, 0, 1.0)]).unwrap();
        let t = DenseMatrix::identity(1);
        let f = ScrFactors::from_parts(e1.clone(), t, e1, 0.0, 0.0).unwrap();
        let fam = build_phi_family(&f, 0).unwrap();
        assert!((fam.z()[(0, 0)] - 1.0).abs() < 1e-15);
        let expect_c0 = std::f64::consts::E - 1.0;
        assert!((fam.coefficient(0)[(0, 0)] - expect_c0).abs() < 1e-14);
        let m = materialize(&fam, 0).unwrap();
        assert!((m[(0, 0)] - std::f64::consts::E).abs() < 1e-14);
        for i in 1..4 {
            assert!((m[(i, i)] - 1.0).abs() < 1e-15);
            assert!(m[(0, i)].abs() < 1e-15);
        }
    }

    #[test]
    fn zero_t_gives_scaled_identities() {
        let e1 = SparseMatrix::from_triplets(3, 1, &[(0, 0, 1.0)]).unwrap();
        let t = DenseMatrix::zeros(1, 1);
        let f = ScrFactors::from_parts(e1.clone(), t, e1, 0.0, 0.0).unwrap();
        let fam = build_phi_family(&f, 3).unwrap();
        for ell in 0..=3 {
            assert!(fam.coefficient(ell).frobenius_norm() < 1e-300);
            let m = materialize(&fam, ell).unwrap();
            let expect = DenseMatrix::scaled_identity(3, 1.0 / factorial(ell));
            assert!(m.sub(&expect).frobenius_norm() < 1e-15);
        }
    }

    #[test]
    fn materialize_matches_taylor_oracle() {
        let f = factored_instance(120, 8, 1);
        let fam = build_phi_family(&f, 4).unwrap();
        let dense = f.to_dense().unwrap();
        for ell in 0..=4 {
            let oracle = phi_taylor_oracle(&dense, ell, 60).unwrap();
            let got = materialize(&fam, ell).unwrap();
            let err = rel_err(&got, &oracle);
            assert!(err <= 1e-12, "ell {ell}: {err}");
        }
    }

    #[test]
    fn z_matches_recomputation() {
        let f = factored_instance(60, 5, 2);
        let fam = build_phi_family(&f, 2).unwrap();
        let z2 = f
            .t
            .matmul(&f.y.t_mul_dense(&f.x.to_dense()).unwrap())
            .unwrap();
        assert!(rel_err(fam.z(), &z2) < 1e-14);
    }

    #[test]
    fn apply_matches_materialized_product() {
        let f = factored_instance(80, 6, 3);
        let fam = build_phi_family(&f, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let v: Vec<f64> = (0..80).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for ell in 0..=4 {
            let m = materialize(&fam, ell).unwrap();
            let direct = m.matvec(&v).unwrap();
            let fast = apply(&fam, ell, &v).unwrap();
            let num: f64 = direct
                .iter()
                .zip(&fast)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = direct.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(num / den.max(1e-300) <= 1e-12);
        }
    }

    #[test]
    fn apply_zero_vector() {
        let f = factored_instance(30, 3, 4);
        let fam = build_phi_family(&f, 1).unwrap();
        let out = apply(&fam, 1, &vec![0.0; 30]).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn symmetric_instance_materializes_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = DenseMatrix::from_fn(40, 4, |_, _| rng.gen_range(-0.5..0.5));
        let gs = SparseMatrix::from_dense(&g);
        let f = ScrFactors::from_parts(gs.clone(), DenseMatrix::identity(4), gs, 0.0, 0.0).unwrap();
        let fam = build_phi_family(&f, 2).unwrap();
        let m = materialize(&fam, 2).unwrap();
        assert!(rel_err(&m, &m.transpose()) < 1e-12);
    }

    #[test]
    fn eta_sandwich_contains_exact_norm() {
        for seed in 0..4 {
            let f = factored_instance(90, 7, 20 + seed);
            let fam = build_phi_family(&f, 4).unwrap();
            for ell in 0..=4 {
                let (eta, lower, upper) = norm_estimate_eta(&fam, ell).unwrap();
                let exact = norm2_exact_small(&materialize(&fam, ell).unwrap()).unwrap();
                assert!(
                    lower <= exact + 1e-10 && exact <= upper + 1e-10,
                    "seed {seed} ell {ell}: eta {eta}, exact {exact} not in [{lower}, {upper}]"
                );
            }
        }
    }

    #[test]
    fn eta_rank_one_exponential() {
        let e1 = SparseMatrix::from_triplets(4, 1, &[(0, 0, 1.0)]).unwrap();
        let f = ScrFactors::from_parts(e1.clone(), DenseMatrix::identity(1), e1, 0.0, 0.0).unwrap();
        let fam = build_phi_family(&f, 0).unwrap();
        let (eta, lower, upper) = norm_estimate_eta(&fam, 0).unwrap();
        let e = std::f64::consts::E;
        assert!((eta - (e - 1.0)).abs() < 1e-13);
        assert!(lower <= e && e <= upper);
    }

    #[test]
    fn sandwich_norm_equals_materialized_product_norm() {
        // ||R1 C R2ᵀ||_2 = ||X C Yᵀ||_2 by unitary invariance.
        let f = factored_instance(70, 6, 30);
        let fam = build_phi_family(&f, 3).unwrap();
        for ell in 0..=3 {
            let via_r = norm2_exact_small(&sandwich(&fam, fam.coefficient(ell)).unwrap()).unwrap();
            let xc = fam.x().mul_dense(fam.coefficient(ell)).unwrap();
            let full = xc.matmul(&fam.y().to_dense().transpose()).unwrap();
            let direct = norm2_exact_small(&full).unwrap();
            assert!(
                (via_r - direct).abs() <= 1e-10 * direct.max(1e-30),
                "ell {ell}: {via_r} vs {direct}"
            );
        }
    }
}
