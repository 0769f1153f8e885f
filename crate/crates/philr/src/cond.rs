//! Fréchet derivatives of the phi-functions, their Kronecker forms, exact
//! small-scale condition numbers, and the two factored-form estimators.
//!
//! Two independent routes to the derivative are kept side by side: the
//! augmented 2n-by-2n block evaluation and Gauss-Legendre quadrature of the
//! integral representation. They cross-validate each other in the test
//! suites; neither is ever replaced by the other.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core::{
    kron, norm2_exact_small, singular_values, unvec, vec_of, ComputationError, DenseMatrix, Result,
};
use crate::lowrank::{norm_estimate_eta, sandwich, LowRankPhiFamily};
use crate::phikernel::phi_family_dense;
use crate::scr::ScrFactors;

/// Dimension cap for explicit n²-by-n² Kronecker forms.
pub const KRONECKER_DIM_LIMIT: usize = 12;

/// Dimension cap for the 2-norm sandwich search.
pub const SANDWICH_DIM_LIMIT: usize = 8;

/// Default Gauss-Legendre node count; adaptive runs double it until
/// successive results agree or [`QUADRATURE_MAX_NODES`] is reached.
pub const QUADRATURE_DEFAULT_NODES: usize = 32;
pub const QUADRATURE_MAX_NODES: usize = 128;

/// Power-iteration defaults for the Fréchet-norm estimator: condition
/// numbers only need the leading digit.
pub const STRATEGY_TWO_DEFAULT_TOL: f64 = 1e-3;
pub const STRATEGY_TWO_DEFAULT_MAX_ITER: usize = 50;

/// Which estimator produced a [`CondEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondStrategy {
    Exact,
    StrategyOne,
    StrategyTwo,
}

impl std::fmt::Display for CondStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CondStrategy::Exact => "exact",
            CondStrategy::StrategyOne => "strategy-one",
            CondStrategy::StrategyTwo => "strategy-two",
        };
        f.write_str(s)
    }
}

/// Absolute and relative 2-norm condition estimates with diagnostics.
///
/// `relative` always equals `absolute * norm_a / phi_norm` (with a zero guard
/// when `absolute` vanishes), where `phi_norm` is the eta surrogate for the
/// strategies and the exact `||phi_l(A)||_2` in exact mode.
#[derive(Debug, Clone)]
pub struct CondEstimate {
    pub ell: usize,
    pub absolute: f64,
    pub relative: f64,
    pub strategy: CondStrategy,
    pub norm_a: f64,
    pub phi_norm: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

/// The n²-by-n² matrix `K` with `K vec(E) = vec(L(A, E))`.
#[derive(Debug, Clone)]
pub struct KroneckerForm {
    pub dimension: usize,
    pub entries: DenseMatrix,
}

impl KroneckerForm {
    /// Applies the form to a direction matrix.
    pub fn apply(&self, e: &DenseMatrix) -> Result<DenseMatrix> {
        let n = e.rows();
        let out = self.entries.matvec(&vec_of(e))?;
        Ok(unvec(&out, n, n))
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fréchet derivative `L_{phi_l}(A, E)` via the augmented block identity:
/// `phi_l([[A, E], [0, A]])` has the derivative in its top-right block.
pub fn frechet_augmented(a: &DenseMatrix, e: &DenseMatrix, ell: usize) -> Result<DenseMatrix> {
    let n = check_same_square(a, e)?;
    let mut block = DenseMatrix::zeros(2 * n, 2 * n);
    block.set_block(0, 0, a);
    block.set_block(0, n, e);
    block.set_block(n, n, a);
    let fam = phi_family_dense(&block, ell)?;
    Ok(fam.phi(ell).block(0, n, n, n))
}

/// Fréchet derivative by Gauss-Legendre quadrature of
/// `integral_0^1 exp((1-s)A) s^l E phi_l(sA) ds`.
pub fn frechet_quadrature(
    a: &DenseMatrix,
    e: &DenseMatrix,
    ell: usize,
    nodes: usize,
) -> Result<DenseMatrix> {
    check_same_square(a, e)?;
    phi_kernel_integral(a, e, a, ell, nodes)
}

/// Shared integrator for `integral exp((1-s) A_left) s^l E phi_l(s M_right) ds`.
fn phi_kernel_integral(
    a_left: &DenseMatrix,
    e: &DenseMatrix,
    m_right: &DenseMatrix,
    ell: usize,
    nodes: usize,
) -> Result<DenseMatrix> {
    let n = a_left.rows();
    let (s, w) = gauss_legendre_unit(nodes);
    let mut acc = DenseMatrix::zeros(n, n);
    for (sk, wk) in s.iter().zip(&w) {
        let left = crate::phikernel::expm_dense(&a_left.scale(1.0 - sk))?;
        let right_fam = phi_family_dense(&m_right.scale(*sk), ell)?;
        let term = left.matmul(e)?.matmul(right_fam.phi(ell))?;
        acc.axpy(wk * sk.powi(ell as i32), &term);
    }
    Ok(acc)
}

fn adaptive_kernel_integral(
    a_left: &DenseMatrix,
    e: &DenseMatrix,
    m_right: &DenseMatrix,
    ell: usize,
) -> Result<DenseMatrix> {
    let mut nodes = QUADRATURE_DEFAULT_NODES;
    let mut prev = phi_kernel_integral(a_left, e, m_right, ell, nodes)?;
    while nodes < QUADRATURE_MAX_NODES {
        nodes *= 2;
        let next = phi_kernel_integral(a_left, e, m_right, ell, nodes)?;
        let drift = next.sub(&prev).frobenius_norm();
        prev = next;
        if drift <= 1e-12 * (1.0 + prev.frobenius_norm()) {
            break;
        }
    }
    Ok(prev)
}

/// Residual of the exact perturbation identity
/// `phi_l(A+E) - phi_l(A) = integral_0^1 exp((1-s)A) s^l E phi_l(s(A+E)) ds`,
/// as a Frobenius norm. The identity is exact (not first-order), so the
/// residual is pure quadrature plus round-off.
pub fn perturbation_identity_check(a: &DenseMatrix, e: &DenseMatrix, ell: usize) -> Result<f64> {
    check_same_square(a, e)?;
    let ape = a.add(e);
    let lhs = phi_family_dense(&ape, ell)?
        .phi(ell)
        .sub(phi_family_dense(a, ell)?.phi(ell));
    let rhs = adaptive_kernel_integral(a, e, &ape, ell)?;
    Ok(lhs.sub(&rhs).frobenius_norm())
}

/// Builds the Kronecker form of `L_{phi_l}` column by column: column
/// `j*n + i` is `vec(L(A, e_i e_jᵀ))`.
pub fn kronecker_form(a: &DenseMatrix, ell: usize) -> Result<KroneckerForm> {
    let n = a.rows();
    if !a.is_square() || n > KRONECKER_DIM_LIMIT {
        return Err(ComputationError::DimensionMismatch(format!(
            "explicit Kronecker form limited to order {KRONECKER_DIM_LIMIT}, got {n}"
        )));
    }
    let mut k = DenseMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let mut e = DenseMatrix::zeros(n, n);
            e[(i, j)] = 1.0;
            let l = frechet_augmented(a, &e, ell)?;
            k.col_mut(j * n + i).copy_from_slice(&vec_of(&l));
        }
    }
    Ok(KroneckerForm {
        dimension: n * n,
        entries: k,
    })
}

/// Assembles the Kronecker form of a truncated power series
/// `f(z) = sum alpha_i z^i` at the factored matrix `Ã = X T Yᵀ` from the
/// closed form `K = Psi_1 + Psi_2 + Psi_3` with `W = Y Tᵀ` and `Z = T YᵀX`:
///
/// ```text
///   Psi_1 = alpha_1 (I ⊗ I)
///   Psi_2 = (W ⊗ I) [sum alpha_i ((Zᵀ)^{i-2} ⊗ I)] (X ⊗ I)ᵀ
///         + (I ⊗ X) [sum alpha_i (I ⊗ Z^{i-2})] (I ⊗ W)ᵀ
///   Psi_3 = (W ⊗ X) [sum_{i>=3} alpha_i sum_{j=2}^{i-1} ((Zᵀ)^{i-j-1} ⊗ Z^{j-2})] (X ⊗ W)ᵀ
/// ```
pub fn kronecker_form_lowrank_series(f: &ScrFactors, coeffs: &[f64]) -> Result<KroneckerForm> {
    let n = f.x.rows();
    if n != f.y.rows() || n > KRONECKER_DIM_LIMIT {
        return Err(ComputationError::DimensionMismatch(format!(
            "series Kronecker form limited to square inputs of order {KRONECKER_DIM_LIMIT}"
        )));
    }
    let r = f.rank;
    let q = coeffs.len();
    let x = f.x.to_dense();
    let w = f.y.to_dense().matmul(&f.t.transpose())?;
    let ytx = f.y.t_mul_dense(&f.x.to_dense())?;
    let z = f.t.matmul(&ytx)?;
    let zt = z.transpose();

    // Powers of Z and Zᵀ up to q-3.
    let max_pow = q.saturating_sub(2);
    let mut z_pows = vec![DenseMatrix::identity(r)];
    let mut zt_pows = vec![DenseMatrix::identity(r)];
    for k in 1..=max_pow {
        z_pows.push(z_pows[k - 1].matmul(&z)?);
        zt_pows.push(zt_pows[k - 1].matmul(&zt)?);
    }

    let eye_n = DenseMatrix::identity(n);
    let alpha1 = if q > 1 { coeffs[1] } else { 0.0 };
    let mut k_total = DenseMatrix::scaled_identity(n * n, alpha1);

    if q > 2 {
        let mut mid_left = DenseMatrix::zeros(r * n, r * n);
        let mut mid_right = DenseMatrix::zeros(n * r, n * r);
        for i in 2..q {
            mid_left.axpy(coeffs[i], &kron(&zt_pows[i - 2], &eye_n));
            mid_right.axpy(coeffs[i], &kron(&eye_n, &z_pows[i - 2]));
        }
        let psi2a = kron(&w, &eye_n)
            .matmul(&mid_left)?
            .matmul(&kron(&x, &eye_n).transpose())?;
        let psi2b = kron(&eye_n, &x)
            .matmul(&mid_right)?
            .matmul(&kron(&eye_n, &w).transpose())?;
        k_total = k_total.add(&psi2a).add(&psi2b);
    }

    if q > 3 {
        let mut mid = DenseMatrix::zeros(r * r, r * r);
        for i in 3..q {
            for j in 2..i {
                mid.axpy(coeffs[i], &kron(&zt_pows[i - j - 1], &z_pows[j - 2]));
            }
        }
        let psi3 = kron(&w, &x)
            .matmul(&mid)?
            .matmul(&kron(&x, &w).transpose())?;
        k_total = k_total.add(&psi3);
    }

    Ok(KroneckerForm {
        dimension: n * n,
        entries: k_total,
    })
}

/// Exact reference condition numbers for small matrices:
/// `absolute = ||K_{phi_l}(A)||_2` (the Frobenius-operator norm of the
/// derivative) via dense SVD of the explicit Kronecker form, and
/// `relative = absolute ||A||_2 / ||phi_l(A)||_2`.
pub fn cond_exact_small(a: &DenseMatrix, ell: usize) -> Result<CondEstimate> {
    let n = a.rows();
    if !a.is_square() || n > KRONECKER_DIM_LIMIT {
        return Err(ComputationError::DimensionMismatch(format!(
            "exact condition numbers limited to order {KRONECKER_DIM_LIMIT}, got {n}"
        )));
    }
    let k = kronecker_form(a, ell)?;
    let absolute = norm2_exact_small(&k.entries)?;
    let norm_a = norm2_exact_small(a)?;
    let phi_norm = norm2_exact_small(phi_family_dense(a, ell)?.phi(ell))?;
    let relative = safe_relative(absolute, norm_a, phi_norm)?;
    Ok(CondEstimate {
        ell,
        absolute,
        relative,
        strategy: CondStrategy::Exact,
        norm_a,
        phi_norm,
        diagnostics: BTreeMap::new(),
    })
}

fn safe_relative(absolute: f64, norm_a: f64, phi_norm: f64) -> Result<f64> {
    if absolute == 0.0 {
        return Ok(0.0);
    }
    if phi_norm == 0.0 {
        return Err(ComputationError::SingularFactor(
            "norm surrogate for phi_l is zero with a nonzero absolute estimate".into(),
        ));
    }
    Ok(absolute * norm_a / phi_norm)
}

/// Strategy I: the closed-form estimate
/// `cond_abs = ||R1 phi_1(Z) T R2ᵀ . R1 phi_{l+1}(Z) T R2ᵀ||_2`, and the
/// relative variant with the eta surrogate in the denominator. Costs O(r³).
pub fn strategy_one(fam: &LowRankPhiFamily, ell: usize, norm_a: f64) -> Result<CondEstimate> {
    let first = sandwich(fam, fam.coefficient(0))?;
    let second = sandwich(fam, fam.coefficient(ell))?;
    let absolute = norm2_exact_small(&first.matmul(&second)?)?;
    let (eta, _, _) = norm_estimate_eta(fam, ell)?;
    let relative = safe_relative(absolute, norm_a, eta)?;
    Ok(CondEstimate {
        ell,
        absolute,
        relative,
        strategy: CondStrategy::StrategyOne,
        norm_a,
        phi_norm: eta,
        diagnostics: BTreeMap::new(),
    })
}

/// Strategy II: `cond_abs = ||R1 L_{phi_{l+1}}(Z) T R2ᵀ||_2`, evaluated as
/// the Frobenius-operator norm of the composed linear map
/// `F -> R1 L_{phi_{l+1}}(Z, F) T R2ᵀ` by power iteration with its adjoint
/// `G -> L_{phi_{l+1}}(Zᵀ, R1ᵀ G R2 Tᵀ)`; every derivative evaluation goes
/// through the augmented block form on 2r-by-2r matrices.
pub fn strategy_two(
    fam: &LowRankPhiFamily,
    ell: usize,
    norm_a: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CondEstimate> {
    let (absolute, iterations, converged) = frechet_sandwich_norm(
        fam.r1(),
        fam.z(),
        fam.t(),
        fam.r2(),
        ell + 1,
        tol,
        max_iter,
    )?;
    let (eta, _, _) = norm_estimate_eta(fam, ell)?;
    let relative = safe_relative(absolute, norm_a, eta)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("iterations".into(), iterations as f64);
    diagnostics.insert("inner_tol".into(), tol);
    diagnostics.insert("converged".into(), if converged { 1.0 } else { 0.0 });
    Ok(CondEstimate {
        ell,
        absolute,
        relative,
        strategy: CondStrategy::StrategyTwo,
        norm_a,
        phi_norm: eta,
        diagnostics,
    })
}

/// Frobenius-operator norm of `F -> R1 L_{phi_k}(Z, F) T R2ᵀ` by power
/// iteration. Returns `(norm, iterations, converged)`.
pub fn frechet_sandwich_norm(
    r1: &DenseMatrix,
    z: &DenseMatrix,
    t: &DenseMatrix,
    r2: &DenseMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, usize, bool)> {
    let r = z.rows();
    let zt = z.transpose();
    let forward = |f: &DenseMatrix| -> Result<DenseMatrix> {
        let l = frechet_augmented(z, f, k)?;
        r1.matmul(&l)?.matmul(t)?.matmul(&r2.transpose())
    };
    let adjoint = |g: &DenseMatrix| -> Result<DenseMatrix> {
        let h = r1.transpose().matmul(g)?.matmul(r2)?.matmul(&t.transpose())?;
        frechet_augmented(&zt, &h, k)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x7261_6e64_6f6d_5f66);
    let mut f = DenseMatrix::from_fn(r, r, |_, _| rng.gen_range(-1.0..1.0));
    let nf = f.frobenius_norm();
    if nf == 0.0 {
        return Ok((0.0, 0, true));
    }
    f = f.scale(1.0 / nf);
    let mut sigma = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let g = forward(&f)?;
        let new_sigma = g.frobenius_norm();
        if new_sigma == 0.0 {
            return Ok((0.0, it, true));
        }
        let back = adjoint(&g)?;
        let nb = back.frobenius_norm();
        if nb == 0.0 {
            sigma = new_sigma;
            converged = true;
            break;
        }
        f = back.scale(1.0 / nb);
        if (new_sigma - sigma).abs() <= tol * new_sigma {
            sigma = new_sigma;
            converged = true;
            break;
        }
        sigma = new_sigma;
    }
    Ok((sigma, iterations, converged))
}

/// Verifies the two-sided bound `||L||_2 / sqrt(n) <= ||K||_2 <= sqrt(n) ||L||_2`
/// by computing `||K||_2` exactly and lower-bounding `||L||_2` with a search
/// over `samples` random directions plus the leading right singular direction
/// of `K`. The upper check carries 5% slack for the search gap.
pub fn norm_sandwich_check(
    a: &DenseMatrix,
    ell: usize,
    samples: usize,
) -> Result<(bool, bool)> {
    let n = a.rows();
    if !a.is_square() || n > SANDWICH_DIM_LIMIT {
        return Err(ComputationError::DimensionMismatch(format!(
            "sandwich check limited to order {SANDWICH_DIM_LIMIT}, got {n}"
        )));
    }
    let k = kronecker_form(a, ell)?;
    let knm = nalgebra::DMatrix::from_column_slice(n * n, n * n, k.entries.entries());
    let svd = knm.svd(false, true);
    let k2 = svd.singular_values[0];
    let vt = svd.v_t.expect("requested");
    let top_direction: Vec<f64> = vt.row(0).iter().copied().collect();

    let mut best = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x73616e6477696368);
    let mut candidates: Vec<DenseMatrix> = vec![unvec(&top_direction, n, n)];
    for _ in 0..samples {
        candidates.push(DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)));
    }
    for e in &candidates {
        let denom = norm2_exact_small(e)?;
        if denom == 0.0 {
            continue;
        }
        let l = frechet_augmented(a, e, ell)?;
        let quotient = norm2_exact_small(&l)? / denom;
        best = best.max(quotient);
    }
    let sqrt_n = (n as f64).sqrt();
    let lower_ok = best / sqrt_n <= k2 * (1.0 + 1e-10);
    let upper_ok = k2 <= sqrt_n * best * 1.05;
    Ok((lower_ok, upper_ok))
}

fn check_same_square(a: &DenseMatrix, e: &DenseMatrix) -> Result<usize> {
    if !a.is_square() || a.rows() != e.rows() || a.cols() != e.cols() {
        return Err(ComputationError::DimensionMismatch(format!(
            "derivative point {}x{} and direction {}x{}",
            a.rows(),
            a.cols(),
            e.rows(),
            e.cols()
        )));
    }
    Ok(a.rows())
}
