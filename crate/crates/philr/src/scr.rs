//! Sparse column-row approximation: pivoted quasi-Gram-Schmidt column
//! selection and the factorization `A ~ X T Yᵀ`, where `X` holds selected
//! columns of `A`, `Y` selected rows, and
//! `T = R⁻¹R⁻ᵀ (XᵀAY) S⁻¹S⁻ᵀ` minimizes the Frobenius residual for the
//! chosen selections.

use crate::core::{
    solve_right_upper_mat, solve_right_upper_transpose_mat, solve_upper, solve_upper_mat,
    solve_upper_transpose, solve_upper_transpose_mat, ComputationError, DenseMatrix, Result,
    SparseMatrix,
};

/// Diagonal entries of `R` or `S` below this fraction of the largest are
/// treated as numerically dependent.
const SINGULAR_DIAG_RATIO: f64 = 1e-14;

/// A downdated residual norm below this fraction of its previous trusted
/// value triggers an honest recomputation (guards against cancellation).
const DOWNDATE_GUARD: f64 = 0.1;

/// How the quasi-Gram-Schmidt tolerance is applied to the Frobenius norm of
/// the unapproximated remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceMode {
    /// `tol` is the residual target as given.
    Absolute,
    /// `tol` is multiplied by `||A||_F`.
    Relative,
    /// Absolute when `||A||_F <= 1`, relative otherwise.
    Auto,
}

impl ToleranceMode {
    fn target(self, tol: f64, fro: f64) -> f64 {
        match self {
            ToleranceMode::Absolute => tol,
            ToleranceMode::Relative => tol * fro,
            ToleranceMode::Auto => {
                if fro <= 1.0 {
                    tol
                } else {
                    tol * fro
                }
            }
        }
    }
}

/// Result of the pivoted quasi-Gram-Schmidt selection.
#[derive(Debug, Clone)]
pub struct QgsResult {
    /// Columns of `A` chosen, in pivot order.
    pub selected: Vec<usize>,
    /// Upper triangular factor with positive diagonal; `Q = X R⁻¹` is
    /// implicitly orthonormal.
    pub r: DenseMatrix,
    /// Frobenius norm of the orthogonal remainders of all unselected columns.
    pub residual: f64,
    /// `residual_history[k]` is the residual after `k` selections;
    /// entry 0 is `||A||_F`.
    pub residual_history: Vec<f64>,
    /// False when `max_rank` was reached with the residual above target.
    pub converged: bool,
}

/// Pivoted Gram-Schmidt on the columns of a sparse matrix that never forms
/// `Q` explicitly: only `R`, the selected index set, and the downdated
/// residual column norms are maintained.
///
/// At each step the unselected column with the largest residual norm is
/// chosen; selection stops once the Frobenius norm of the remaining residuals
/// drops to the target (which also caps every single column residual), or at
/// `max_rank`.
pub fn quasi_gram_schmidt(
    a: &SparseMatrix,
    tol: f64,
    max_rank: usize,
    mode: ToleranceMode,
) -> Result<QgsResult> {
    if tol <= 0.0 {
        return Err(ComputationError::DimensionMismatch(
            "quasi-Gram-Schmidt tolerance must be positive".into(),
        ));
    }
    if max_rank == 0 {
        return Err(ComputationError::DimensionMismatch(
            "max_rank must be at least 1".into(),
        ));
    }
    let m = a.cols();
    let fro = a.frobenius_norm();
    let target = mode.target(tol, fro);
    let dependent_sq = (SINGULAR_DIAG_RATIO * fro).powi(2);

    let mut norms_sq = a.column_norms_sq();
    let mut baseline = norms_sq.clone();
    let mut selected: Vec<usize> = Vec::new();
    let mut picked = vec![false; m];
    // r_cols[k] holds column k of R (length k+1).
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    // c_rows[k][j] = q_kᵀ a_j, maintained for every candidate column.
    let mut c_rows: Vec<Vec<f64>> = Vec::new();
    let mut history = vec![fro];

    loop {
        let residual_sq: f64 = norms_sq
            .iter()
            .zip(&picked)
            .filter(|(_, &p)| !p)
            .map(|(&v, _)| v.max(0.0))
            .sum();
        let residual = residual_sq.sqrt();
        if selected.len() > 0 {
            // History entry for the selection just completed.
            if history.len() == selected.len() {
                history.push(residual);
            }
        }
        if residual <= target {
            return finish(a, selected, r_cols, residual, history, true);
        }
        if selected.len() == max_rank {
            return finish(a, selected, r_cols, residual, history, false);
        }

        // Pivot: largest residual norm, ties broken by index.
        let mut pivot = None;
        let mut best = dependent_sq;
        for j in 0..m {
            if !picked[j] && norms_sq[j] > best {
                best = norms_sq[j];
                pivot = Some(j);
            }
        }
        let Some(j_star) = pivot else {
            // Every remaining column is numerically dependent, yet the
            // collective residual still exceeds the target.
            return Err(ComputationError::SingularFactor(format!(
                "no usable pivot left after {} selections (residual {residual:.3e} > target {target:.3e})",
                selected.len()
            )));
        };

        let k = selected.len();
        let mut coeffs: Vec<f64> = (0..k).map(|i| c_rows[i][j_star]).collect();

        // Materialize the residual of the pivot column and run one
        // re-orthogonalization pass.
        let mut v = dense_column(a, j_star);
        subtract_selected_combination(a, &selected, &r_cols, &coeffs, &mut v)?;
        let correction = project_onto_selected(a, &selected, &r_cols, &v)?;
        for (c, d) in coeffs.iter_mut().zip(&correction) {
            *c += d;
        }
        subtract_selected_combination(a, &selected, &r_cols, &correction, &mut v)?;
        let r_kk = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r_kk * r_kk <= dependent_sq {
            return Err(ComputationError::SingularFactor(format!(
                "pivot column {j_star} is numerically dependent on the current selection"
            )));
        }

        let mut r_col = coeffs;
        r_col.push(r_kk);
        r_cols.push(r_col);
        selected.push(j_star);
        picked[j_star] = true;
        norms_sq[j_star] = 0.0;

        // Row k of C: q_kᵀ A with q_k = v / r_kk, then downdate the residual
        // norms of the remaining candidates.
        let mut row = a.matvec_t(&v)?;
        for x in row.iter_mut() {
            *x /= r_kk;
        }
        for j in 0..m {
            if picked[j] {
                continue;
            }
            norms_sq[j] = (norms_sq[j] - row[j] * row[j]).max(0.0);
            if norms_sq[j] < DOWNDATE_GUARD * DOWNDATE_GUARD * baseline[j] {
                c_rows.push(row.clone());
                let fresh = recompute_residual_norm_sq(a, j, &selected, &r_cols, &c_rows)?;
                c_rows.pop();
                norms_sq[j] = fresh;
                baseline[j] = fresh.max(dependent_sq);
            }
        }
        c_rows.push(row);
    }
}

fn finish(
    a: &SparseMatrix,
    selected: Vec<usize>,
    r_cols: Vec<Vec<f64>>,
    residual: f64,
    mut history: Vec<f64>,
    converged: bool,
) -> Result<QgsResult> {
    let _ = a;
    let r = assemble_upper(&r_cols);
    if history.len() == selected.len() {
        history.push(residual);
    }
    Ok(QgsResult {
        selected,
        r,
        residual,
        residual_history: history,
        converged,
    })
}

fn assemble_upper(r_cols: &[Vec<f64>]) -> DenseMatrix {
    let r = r_cols.len();
    let mut m = DenseMatrix::zeros(r, r);
    for (j, col) in r_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

fn dense_column(a: &SparseMatrix, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; a.rows()];
    let (rows, vals) = a.col(j);
    for (&i, &x) in rows.iter().zip(vals) {
        v[i] = x;
    }
    v
}

/// `v -= X_sel (R⁻¹ c)` where `X_sel` are the selected sparse columns.
fn subtract_selected_combination(
    a: &SparseMatrix,
    selected: &[usize],
    r_cols: &[Vec<f64>],
    coeffs: &[f64],
    v: &mut [f64],
) -> Result<()> {
    if coeffs.is_empty() {
        return Ok(());
    }
    let r = assemble_upper(&r_cols[..coeffs.len()]);
    let u = solve_upper(&r, coeffs)?;
    for (idx, &j) in selected.iter().enumerate().take(coeffs.len()) {
        let (rows, vals) = a.col(j);
        for (&i, &x) in rows.iter().zip(vals) {
            v[i] -= u[idx] * x;
        }
    }
    Ok(())
}

/// `Qᵀ v = R⁻ᵀ (X_selᵀ v)` for the current selection.
fn project_onto_selected(
    a: &SparseMatrix,
    selected: &[usize],
    r_cols: &[Vec<f64>],
    v: &[f64],
) -> Result<Vec<f64>> {
    if selected.is_empty() {
        return Ok(Vec::new());
    }
    let w: Vec<f64> = selected
        .iter()
        .map(|&j| {
            let (rows, vals) = a.col(j);
            rows.iter().zip(vals).map(|(&i, &x)| x * v[i]).sum()
        })
        .collect();
    let r = assemble_upper(r_cols);
    solve_upper_transpose(&r, &w)
}

fn recompute_residual_norm_sq(
    a: &SparseMatrix,
    j: usize,
    selected: &[usize],
    r_cols: &[Vec<f64>],
    c_rows: &[Vec<f64>],
) -> Result<f64> {
    let coeffs: Vec<f64> = c_rows.iter().map(|row| row[j]).collect();
    let mut v = dense_column(a, j);
    subtract_selected_combination(a, selected, r_cols, &coeffs, &mut v)?;
    Ok(v.iter().map(|x| x * x).sum())
}

/// The sparse column-row factors `A ~ X T Yᵀ` with residual bookkeeping.
#[derive(Debug, Clone)]
pub struct ScrFactors {
    /// Selected columns of `A`, copied verbatim.
    pub x: SparseMatrix,
    /// Selected rows of `A`, transposed into columns, copied verbatim.
    pub y: SparseMatrix,
    /// The r-by-r coupling matrix.
    pub t: DenseMatrix,
    /// Column-selection residual at the reconciled rank.
    pub eps_col: f64,
    /// Row-selection residual at the reconciled rank.
    pub eps_row: f64,
    /// Reconciled rank.
    pub rank: usize,
    /// Column pivots (into the columns of `A`) actually used.
    pub col_indices: Vec<usize>,
    /// Row pivots (into the rows of `A`) actually used.
    pub row_indices: Vec<usize>,
    /// False when either selection hit `max_rank` above target.
    pub converged: bool,
}

impl ScrFactors {
    /// Wraps externally built factors (synthetic instances, scatter factors).
    pub fn from_parts(
        x: SparseMatrix,
        t: DenseMatrix,
        y: SparseMatrix,
        eps_col: f64,
        eps_row: f64,
    ) -> Result<Self> {
        if x.cols() != t.rows() || y.cols() != t.cols() || t.rows() != t.cols() {
            return Err(ComputationError::DimensionMismatch(format!(
                "factor shapes {}x{}, {}x{}, {}x{} do not compose",
                x.rows(),
                x.cols(),
                t.rows(),
                t.cols(),
                y.rows(),
                y.cols()
            )));
        }
        let rank = t.rows();
        Ok(Self {
            x,
            y,
            t,
            eps_col,
            eps_row,
            rank,
            col_indices: Vec::new(),
            row_indices: Vec::new(),
            converged: true,
        })
    }

    /// Densified `X T Yᵀ`.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let xt = self.x.mul_dense(&self.t)?;
        let ytrans = self.y.to_dense().transpose();
        xt.matmul(&ytrans)
    }
}

/// Computes the sparse column-row approximation of `A`: quasi-Gram-Schmidt on
/// the columns of `A` and of `Aᵀ`, ranks reconciled to the minimum of the two
/// by truncating the larger selection in pivot order, and
/// `T = R⁻¹R⁻ᵀ (XᵀAY) S⁻¹S⁻ᵀ` computed by triangular solves.
pub fn scr_approximate(
    a: &SparseMatrix,
    tol_col: f64,
    tol_row: f64,
    max_rank: usize,
    mode: ToleranceMode,
) -> Result<ScrFactors> {
    if a.is_zero() {
        return Err(ComputationError::RankExceeded(
            "input matrix has no nonzero entries".into(),
        ));
    }
    let at = a.transpose();
    let col_pass = quasi_gram_schmidt(a, tol_col, max_rank, mode)?;
    let row_pass = quasi_gram_schmidt(&at, tol_row, max_rank, mode)?;
    let rank = col_pass.selected.len().min(row_pass.selected.len());
    if rank == 0 {
        return Err(ComputationError::RankExceeded(
            "tolerance exceeds the norm of the matrix; no columns selected".into(),
        ));
    }
    let col_indices = col_pass.selected[..rank].to_vec();
    let row_indices = row_pass.selected[..rank].to_vec();
    let r = col_pass.r.block(0, 0, rank, rank);
    let s = row_pass.r.block(0, 0, rank, rank);
    for (name, tri) in [("R", &r), ("S", &s)] {
        let largest = (0..rank).map(|i| tri[(i, i)]).fold(0.0f64, f64::max);
        for i in 0..rank {
            if tri[(i, i)] < SINGULAR_DIAG_RATIO * largest {
                return Err(ComputationError::SingularFactor(format!(
                    "{name} has a negligible diagonal entry at {i}"
                )));
            }
        }
    }
    let x = a.extract_columns(&col_indices)?;
    let y = at.extract_columns(&row_indices)?;

    // T = R⁻¹ R⁻ᵀ (Xᵀ A Y) S⁻¹ S⁻ᵀ, via four triangular solves.
    let ay = a.mul_dense(&y.to_dense())?;
    let xtay = x.t_mul_dense(&ay)?;
    let w1 = solve_upper_transpose_mat(&r, &xtay)?;
    let w2 = solve_upper_mat(&r, &w1)?;
    let w3 = solve_right_upper_mat(&s, &w2)?;
    let t = solve_right_upper_transpose_mat(&s, &w3)?;

    Ok(ScrFactors {
        x,
        y,
        t,
        eps_col: col_pass.residual_history[rank],
        eps_row: row_pass.residual_history[rank],
        rank,
        col_indices,
        row_indices,
        converged: col_pass.converged && row_pass.converged,
    })
}

/// Exact `||A - X T Yᵀ||_F` without materializing the n-by-n product: the
/// difference is accumulated one column at a time as
/// `a_j - X (T (Yᵀ e_j))`, with compensated summation of the squared column
/// norms. This stays accurate down to round-off even when the factorization
/// is exact, where a trace-expansion of the same quantity would cancel
/// catastrophically.
pub fn scr_residual(a: &SparseMatrix, f: &ScrFactors) -> Result<f64> {
    if f.x.rows() != a.rows() || f.y.rows() != a.cols() {
        return Err(ComputationError::DimensionMismatch(format!(
            "factors for a {}x{} matrix applied to {}x{}",
            f.x.rows(),
            f.y.rows(),
            a.rows(),
            a.cols()
        )));
    }
    let r = f.rank;
    let yt = f.y.transpose();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut diff = vec![0.0f64; a.rows()];
    for j in 0..a.cols() {
        // u = T * (row j of Y)
        let (y_rows, y_vals) = yt.col(j);
        let mut u = vec![0.0; r];
        for (&k, &w) in y_rows.iter().zip(y_vals) {
            for (ui, ti) in u.iter_mut().zip(f.t.col(k)) {
                *ui += ti * w;
            }
        }
        diff.iter_mut().for_each(|d| *d = 0.0);
        let (a_rows, a_vals) = a.col(j);
        for (&i, &v) in a_rows.iter().zip(a_vals) {
            diff[i] = v;
        }
        for (k, &uk) in u.iter().enumerate() {
            if uk == 0.0 {
                continue;
            }
            let (x_rows, x_vals) = f.x.col(k);
            for (&i, &v) in x_rows.iter().zip(x_vals) {
                diff[i] -= uk * v;
            }
        }
        let col_sq: f64 = diff.iter().map(|d| d * d).sum();
        let y = col_sq - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn decaying_matrix(n: usize, seed: u64) -> SparseMatrix {
        // Orthogonal-times-diagonal-times-orthogonal with sigma_j = 2^-j.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g1 = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let g2 = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let (u, _) = crate::core::qr_thin(&g1).unwrap();
        let (v, _) = crate::core::qr_thin(&g2).unwrap();
        let mut d = DenseMatrix::zeros(n, n);
        for j in 0..n {
            d[(j, j)] = 0.5f64.powi(j as i32 + 1);
        }
        let ud = u.matmul(&d).unwrap();
        SparseMatrix::from_dense(&ud.matmul(&v.transpose()).unwrap())
    }

    #[test]
    fn diagonal_selects_by_magnitude() {
        let a =
            SparseMatrix::from_triplets(3, 3, &[(0, 0, 5.0), (1, 1, 3.0), (2, 2, 1.0)]).unwrap();
        let q = quasi_gram_schmidt(&a, 0.5, 10, ToleranceMode::Absolute).unwrap();
        assert_eq!(q.selected, vec![0, 1, 2]);
        assert!(q.residual < 1e-12);
        assert!(q.converged);
    }

    #[test]
    fn duplicate_column_never_selected() {
        // Columns 0 and 2 identical; pivoting keeps the span clean.
        let a = SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (1, 1, 1.0), (0, 2, 2.0), (2, 1, 0.5)],
        )
        .unwrap();
        let q = quasi_gram_schmidt(&a, 1e-10, 10, ToleranceMode::Absolute).unwrap();
        assert!(q.converged);
        assert_eq!(q.selected.len(), 2);
        assert!(!q.selected.contains(&2) || !q.selected.contains(&0));
    }

    #[test]
    fn decaying_spectrum_residual_matches_dense_oracle() {
        let a = decaying_matrix(100, 1);
        let q = quasi_gram_schmidt(&a, 1e-5, 100, ToleranceMode::Absolute).unwrap();
        assert!(q.converged);
        assert!(q.residual <= 1e-5 * a.frobenius_norm() + 1e-16);
        assert!(
            (14..=22).contains(&q.selected.len()),
            "rank {}",
            q.selected.len()
        );
        // Dense Gram-Schmidt oracle on the same pivot sequence.
        let ad = a.to_dense();
        let n = a.rows();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for &j in &q.selected {
            let mut v = ad.col(j).to_vec();
            for b in &basis {
                let dot: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
            // second pass
            for b in &basis {
                let dot: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push(v);
        }
        let mut residual_sq = 0.0;
        for j in 0..n {
            if q.selected.contains(&j) {
                continue;
            }
            let mut v = ad.col(j).to_vec();
            for b in &basis {
                let dot: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
            residual_sq += v.iter().map(|x| x * x).sum::<f64>();
        }
        let oracle = residual_sq.sqrt();
        assert!(
            (q.residual - oracle).abs() <= 1e-8 * (1.0 + oracle),
            "reported {} oracle {}",
            q.residual,
            oracle
        );
    }

    #[test]
    fn pivot_monotonicity() {
        let a = decaying_matrix(60, 2);
        let q = quasi_gram_schmidt(&a, 1e-12, 40, ToleranceMode::Absolute).unwrap();
        for w in q.residual_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0]));
        }
    }

    #[test]
    fn determinism() {
        let a = decaying_matrix(80, 3);
        let q1 = quasi_gram_schmidt(&a, 1e-6, 80, ToleranceMode::Absolute).unwrap();
        let q2 = quasi_gram_schmidt(&a, 1e-6, 80, ToleranceMode::Absolute).unwrap();
        assert_eq!(q1.selected, q2.selected);
        assert_eq!(q1.residual.to_bits(), q2.residual.to_bits());
    }

    #[test]
    fn exact_rank_three_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 50;
        let x0 = DenseMatrix::from_fn(n, 3, |_, _| rng.gen_range(-1.0..1.0));
        let t0 = DenseMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let y0 = DenseMatrix::from_fn(n, 3, |_, _| rng.gen_range(-1.0..1.0));
        let prod = x0.matmul(&t0).unwrap().matmul(&y0.transpose()).unwrap();
        let a = SparseMatrix::from_dense(&prod);
        let f = scr_approximate(&a, 1e-10, 1e-10, 20, ToleranceMode::Relative).unwrap();
        assert_eq!(f.rank, 3);
        let err = scr_residual(&a, &f).unwrap();
        assert!(err / a.frobenius_norm() <= 1e-12, "relative error {err}");
    }

    #[test]
    fn dropped_singular_value_shows_in_eps() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1e-8)]).unwrap();
        let f = scr_approximate(&a, 1e-5, 1e-5, 10, ToleranceMode::Absolute).unwrap();
        assert_eq!(f.rank, 1);
        assert!((f.eps_col - 1e-8).abs() <= 1e-8 * 1e-6);
        assert!((f.eps_row - 1e-8).abs() <= 1e-8 * 1e-6);
    }

    #[test]
    fn symmetric_input_selects_same_rows_and_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = DenseMatrix::from_fn(30, 4, |_, _| rng.gen_range(-1.0..1.0));
        let sym = g.matmul(&g.transpose()).unwrap();
        let a = SparseMatrix::from_dense(&sym);
        let f = scr_approximate(&a, 1e-8, 1e-8, 10, ToleranceMode::Relative).unwrap();
        assert_eq!(f.col_indices, f.row_indices);
    }

    #[test]
    fn residual_honors_error_bound() {
        for seed in 0..5 {
            let a = decaying_matrix(80, 100 + seed);
            let f = scr_approximate(&a, 1e-5, 1e-5, 60, ToleranceMode::Absolute).unwrap();
            let measured = scr_residual(&a, &f).unwrap();
            let bound = (f.eps_col * f.eps_col + f.eps_row * f.eps_row).sqrt();
            assert!(
                measured <= bound + 1e-10 * a.frobenius_norm(),
                "seed {seed}: {measured} > {bound}"
            );
        }
    }

    #[test]
    fn residual_matches_materialized_difference() {
        let a = decaying_matrix(60, 6);
        let f = scr_approximate(&a, 1e-6, 1e-6, 40, ToleranceMode::Absolute).unwrap();
        let fast = scr_residual(&a, &f).unwrap();
        let dense_diff = a.to_dense().sub(&f.to_dense().unwrap()).frobenius_norm();
        assert!(
            (fast - dense_diff).abs() <= 1e-9 * (1.0 + dense_diff),
            "{fast} vs {dense_diff}"
        );
    }

    #[test]
    fn zero_matrix_rejected() {
        let a = SparseMatrix::from_triplets(3, 3, &[]).unwrap();
        let err = scr_approximate(&a, 1e-5, 1e-5, 3, ToleranceMode::Absolute).unwrap_err();
        assert_eq!(err.kind(), crate::core::ErrorKind::RankExceeded);
    }

    #[test]
    fn oversized_tolerance_gives_rank_exceeded() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
        let err = scr_approximate(&a, 10.0, 10.0, 2, ToleranceMode::Absolute).unwrap_err();
        assert_eq!(err.kind(), crate::core::ErrorKind::RankExceeded);
    }

    #[test]
    fn max_rank_flags_unconverged() {
        let a = decaying_matrix(50, 7);
        let q = quasi_gram_schmidt(&a, 1e-12, 3, ToleranceMode::Absolute).unwrap();
        assert!(!q.converged);
        assert_eq!(q.selected.len(), 3);
        assert!(q.residual > 1e-12);
    }

    #[test]
    fn x_columns_bitwise_equal_input_columns() {
        let a = decaying_matrix(40, 8);
        let f = scr_approximate(&a, 1e-6, 1e-6, 30, ToleranceMode::Absolute).unwrap();
        for (k, &j) in f.col_indices.iter().enumerate() {
            let (rows_x, vals_x) = f.x.col(k);
            let (rows_a, vals_a) = a.col(j);
            assert_eq!(rows_x, rows_a);
            assert!(vals_x
                .iter()
                .zip(vals_a)
                .all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}
