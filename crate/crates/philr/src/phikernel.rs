//! Dense evaluation of the phi-function family for small matrices, plus an
//! independent Taylor-series oracle used by the test suites.
//!
//! The family phi_0 = exp, phi_l(z) = z phi_{l+1}(z) + 1/l! is evaluated by a
//! single exponential of an augmented block matrix: with
//!
//! ```text
//!     B = [ M  I        ]      (p+1 block rows/cols, each r-by-r,
//!         [    0  I     ]       identity blocks on the superdiagonal)
//!         [       ...   ]
//!         [           0 ]
//! ```
//!
//! one has exp(B)[0, k] = sum_{m >= k} M^{m-k} / m! = phi_k(M), so the whole
//! family drops out of one scaling-and-squaring call.

use crate::core::{ComputationError, DenseMatrix, Result};

/// Dense-kernel dimension guard: the augmented block matrix must stay within
/// this order.
pub const DENSE_KERNEL_THRESHOLD: usize = 2000;

/// Pade(13) numerator coefficients for the matrix exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Scaling threshold for Pade(13).
const THETA13: f64 = 5.371920351148152;

/// The family `phi_0(M) .. phi_p(M)` for one square matrix `M`.
#[derive(Debug, Clone)]
pub struct PhiFamilyDense {
    order: usize,
    matrices: Vec<DenseMatrix>,
}

impl PhiFamilyDense {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `phi_ell(M)`; panics if `ell > order`.
    pub fn phi(&self, ell: usize) -> &DenseMatrix {
        &self.matrices[ell]
    }

    /// Largest Frobenius deviation of the recurrence
    /// `phi_l(M) = M phi_{l+1}(M) + I/l!` over `l < order`, relative to
    /// `1 + ||phi_l||_F`.
    pub fn recurrence_residual(&self, m: &DenseMatrix) -> Result<f64> {
        let n = m.rows();
        let mut worst = 0.0f64;
        for ell in 0..self.order {
            let mut rhs = m.matmul(&self.matrices[ell + 1])?;
            let coeff = 1.0 / factorial(ell);
            for i in 0..n {
                rhs[(i, i)] += coeff;
            }
            let dev = self.matrices[ell].sub(&rhs).frobenius_norm()
                / (1.0 + self.matrices[ell].frobenius_norm());
            worst = worst.max(dev);
        }
        Ok(worst)
    }
}

/// `l!` as a float; exact for every `l` this crate uses.
pub fn factorial(l: usize) -> f64 {
    (1..=l).map(|k| k as f64).product()
}

/// Matrix exponential by scaling and squaring with a diagonal Pade(13)
/// approximant.
pub fn expm_dense(m: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(ComputationError::DimensionMismatch(format!(
            "matrix exponential of {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    let norm = m.one_norm();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a = m.scale(0.5f64.powi(squarings as i32));

    let a2 = a.matmul(&a)?;
    let a4 = a2.matmul(&a2)?;
    let a6 = a2.matmul(&a4)?;
    let ident = DenseMatrix::identity(n);

    // u = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let mut w = a6.scale(PADE13[13]);
    w.axpy(PADE13[11], &a4);
    w.axpy(PADE13[9], &a2);
    let mut u_inner = a6.matmul(&w)?;
    u_inner.axpy(PADE13[7], &a6);
    u_inner.axpy(PADE13[5], &a4);
    u_inner.axpy(PADE13[3], &a2);
    u_inner.axpy(PADE13[1], &ident);
    let u = a.matmul(&u_inner)?;

    // v = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let mut w2 = a6.scale(PADE13[12]);
    w2.axpy(PADE13[10], &a4);
    w2.axpy(PADE13[8], &a2);
    let mut v = a6.matmul(&w2)?;
    v.axpy(PADE13[6], &a6);
    v.axpy(PADE13[4], &a4);
    v.axpy(PADE13[2], &a2);
    v.axpy(PADE13[0], &ident);

    // exp(A) ~ (V - U)^{-1} (V + U)
    let numer = v.add(&u);
    let denom = v.sub(&u);
    let mut e = denom.solve_lu(&numer)?;
    for _ in 0..squarings {
        e = e.matmul(&e)?;
    }
    Ok(e)
}

/// Evaluates `phi_0(M) .. phi_p(M)` via one exponential of the augmented
/// block matrix described in the module docs; `phi_0` itself comes from a
/// direct [`expm_dense`] call.
pub fn phi_family_dense(m: &DenseMatrix, p: usize) -> Result<PhiFamilyDense> {
    if !m.is_square() {
        return Err(ComputationError::DimensionMismatch(format!(
            "phi family of {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let r = m.rows();
    let dim = r * (p + 1);
    if dim > DENSE_KERNEL_THRESHOLD {
        return Err(ComputationError::DimensionMismatch(format!(
            "augmented matrix of order {dim} exceeds the dense threshold {DENSE_KERNEL_THRESHOLD}"
        )));
    }
    let mut matrices = Vec::with_capacity(p + 1);
    matrices.push(expm_dense(m)?);
    if p == 0 {
        return Ok(PhiFamilyDense { order: p, matrices });
    }
    if r == 0 {
        for _ in 1..=p {
            matrices.push(DenseMatrix::zeros(0, 0));
        }
        return Ok(PhiFamilyDense { order: p, matrices });
    }
    let mut aug = DenseMatrix::zeros(dim, dim);
    aug.set_block(0, 0, m);
    for k in 0..p {
        for i in 0..r {
            aug[(k * r + i, (k + 1) * r + i)] = 1.0;
        }
    }
    let e = expm_dense(&aug)?;
    for k in 1..=p {
        matrices.push(e.block(0, k * r, r, r));
    }
    Ok(PhiFamilyDense { order: p, matrices })
}

/// Truncated-series evaluation of `phi_ell(M)` with compensated summation:
/// the partial sum of `M^k / (k + ell)!` for `k = 0..terms`, with an early
/// exit once a term falls below roundoff relative to the running sum.
///
/// This routine exists as an independent witness for the family evaluation
/// and deliberately shares no code with [`phi_family_dense`]. The truncation
/// error is bounded by `||M||^{terms+1} / (terms + ell + 1)!` times a modest
/// geometric factor, so keep `||M||_2` within ~20.
pub fn phi_taylor_oracle(m: &DenseMatrix, ell: usize, terms: usize) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(ComputationError::DimensionMismatch(format!(
            "phi series of {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let mut sum = DenseMatrix::scaled_identity(n, 1.0 / factorial(ell));
    let mut comp = DenseMatrix::zeros(n, n);
    let mut term = DenseMatrix::identity(n);
    for k in 1..=terms {
        // term_k = term_{k-1} * M / (ell + k), so term_k = M^k ell!/(ell+k)!.
        term = term.matmul(m)?.scale(1.0 / (ell + k) as f64);
        kahan_add(&mut sum, &mut comp, &term.scale(1.0 / factorial(ell)));
        if term.frobenius_norm() / factorial(ell) < f64::EPSILON * sum.frobenius_norm() {
            break;
        }
    }
    Ok(sum)
}

/// Scalar `phi_ell(z)`, series for small `|z|` and the downward recurrence
/// from `exp` otherwise.
pub fn phi_scalar(ell: usize, z: f64) -> f64 {
    if z.abs() < 0.5 {
        let mut sum = 0.0f64;
        let mut c = 0.0f64;
        let mut term = 1.0 / factorial(ell);
        for k in 0..60 {
            let y = term - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
            term *= z / (ell + k + 1) as f64;
            if term.abs() < f64::EPSILON * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let mut phi = z.exp();
        for l in 0..ell {
            phi = (phi - 1.0 / factorial(l)) / z;
        }
        phi
    }
}

/// Scalar derivative `phi_ell'(z)` from `z phi_ell'(z) = phi_{ell-1}(z) - ell phi_ell(z)`.
pub fn phi_scalar_derivative(ell: usize, z: f64) -> f64 {
    if z.abs() < 1e-8 {
        // Series: phi_ell'(0) = 1/(ell+1)!, next term 2 z / (ell+2)!.
        1.0 / factorial(ell + 1) + 2.0 * z / factorial(ell + 2)
    } else if ell == 0 {
        z.exp()
    } else {
        (phi_scalar(ell - 1, z) - ell as f64 * phi_scalar(ell, z)) / z
    }
}

fn kahan_add(sum: &mut DenseMatrix, comp: &mut DenseMatrix, term: &DenseMatrix) {
    let n = sum.rows();
    for j in 0..sum.cols() {
        for i in 0..n {
            let y = term[(i, j)] - comp[(i, j)];
            let t = sum[(i, j)] + y;
            comp[(i, j)] = (t - sum[(i, j)]) - y;
            sum[(i, j)] = t;
        }
    }
}
