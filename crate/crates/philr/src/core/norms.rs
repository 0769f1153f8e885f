//! Norm computations: exact small-matrix 2-norms via dense SVD and a power
//! iteration estimator for large sparse matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::DenseMatrix;
use super::error::{ComputationError, Result};
use super::sparse::SparseMatrix;

/// Dimension limit for the dense-SVD 2-norm path.
pub const SMALL_MATRIX_THRESHOLD: usize = 2000;

/// Default relative tolerance for the power iteration.
pub const NORM2_DEFAULT_TOL: f64 = 1e-8;

/// Default iteration cap for the power iteration.
pub const NORM2_DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Two,
    One,
    Frobenius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    Exact,
    PowerIteration,
}

/// A computed norm together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub value: f64,
    pub kind: NormKind,
    pub method: NormMethod,
    pub iterations: usize,
    pub converged: bool,
}

impl NormReport {
    pub fn exact(value: f64, kind: NormKind) -> Self {
        Self {
            value,
            kind,
            method: NormMethod::Exact,
            iterations: 0,
            converged: true,
        }
    }
}

/// Largest singular value of a small dense matrix via full SVD.
pub fn norm2_exact_small(m: &DenseMatrix) -> Result<f64> {
    if m.rows() > SMALL_MATRIX_THRESHOLD || m.cols() > SMALL_MATRIX_THRESHOLD {
        return Err(ComputationError::DimensionMismatch(format!(
            "{}x{} exceeds the small-matrix threshold {}",
            m.rows(),
            m.cols(),
            SMALL_MATRIX_THRESHOLD
        )));
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0.0);
    }
    let anm = nalgebra::DMatrix::from_column_slice(m.rows(), m.cols(), m.entries());
    let sv = anm.singular_values();
    Ok(sv.iter().fold(0.0f64, |acc, &s| acc.max(s)))
}

/// All singular values of a small dense matrix, descending.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.rows() > SMALL_MATRIX_THRESHOLD || m.cols() > SMALL_MATRIX_THRESHOLD {
        return Err(ComputationError::DimensionMismatch(
            "matrix exceeds the small-matrix threshold".into(),
        ));
    }
    let anm = nalgebra::DMatrix::from_column_slice(m.rows(), m.cols(), m.entries());
    let mut sv: Vec<f64> = anm.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(sv)
}

/// Estimates the largest singular value of a sparse matrix by power iteration
/// on `AᵀA`.
///
/// The start vector is the normalized row-sum vector pulled back through
/// `Aᵀ`; if that lands in the null space a fixed-seed random vector is used
/// instead. The returned estimate never exceeds the Frobenius norm.
pub fn norm2_estimate(a: &SparseMatrix, tol: f64, max_iter: usize) -> Result<NormReport> {
    if a.is_zero() {
        return Err(ComputationError::DimensionMismatch(
            "2-norm estimate of an all-zero matrix".into(),
        ));
    }
    if tol <= 0.0 {
        return Err(ComputationError::DimensionMismatch(
            "power iteration tolerance must be positive".into(),
        ));
    }
    let fro = a.frobenius_norm();
    let row_sums = a.matvec(&vec![1.0; a.cols()])?;
    let mut v = a.matvec_t(&row_sums)?;
    if normalize(&mut v) == 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
        for x in v.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        if normalize(&mut v) == 0.0 {
            return Err(ComputationError::ConvergenceFailure(
                "could not build a start vector".into(),
            ));
        }
    }
    let mut sigma = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let w = a.matvec(&v)?;
        let new_sigma = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if new_sigma == 0.0 {
            // v is numerically in the null space; restart randomly once.
            let mut rng = ChaCha8Rng::seed_from_u64(0xd1b54a32d192ed03 ^ it as u64);
            for x in v.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
            normalize(&mut v);
            continue;
        }
        v = a.matvec_t(&w)?;
        normalize(&mut v);
        if (new_sigma - sigma).abs() <= tol * new_sigma {
            sigma = new_sigma;
            converged = true;
            break;
        }
        sigma = new_sigma;
    }
    Ok(NormReport {
        value: sigma.min(fro),
        kind: NormKind::Two,
        method: NormMethod::PowerIteration,
        iterations,
        converged,
    })
}

/// Like [`norm2_estimate`] but fails instead of returning `converged = false`.
pub fn norm2_estimate_strict(a: &SparseMatrix, tol: f64, max_iter: usize) -> Result<NormReport> {
    let report = norm2_estimate(a, tol, max_iter)?;
    if !report.converged {
        return Err(ComputationError::ConvergenceFailure(format!(
            "2-norm power iteration did not reach tol {tol} in {max_iter} iterations"
        )));
    }
    Ok(report)
}

/// Power iteration for the largest singular value of a dense matrix; used
/// where full SVD would dominate the runtime.
pub fn norm2_power_dense(m: &DenseMatrix, tol: f64, max_iter: usize) -> NormReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x517cc1b727220a95);
    let mut v: Vec<f64> = (0..m.cols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);
    let mut sigma = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let w = m.matvec(&v).expect("dimension fixed");
        let new_sigma = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if new_sigma == 0.0 {
            sigma = 0.0;
            converged = true;
            break;
        }
        v = m.matvec_t(&w).expect("dimension fixed");
        normalize(&mut v);
        if (new_sigma - sigma).abs() <= tol * new_sigma {
            sigma = new_sigma;
            converged = true;
            break;
        }
        sigma = new_sigma;
    }
    NormReport {
        value: sigma,
        kind: NormKind::Two,
        method: NormMethod::PowerIteration,
        iterations,
        converged,
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}
