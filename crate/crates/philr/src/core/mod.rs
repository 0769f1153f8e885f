//! Shared matrix types, norms, QR utilities, and the error taxonomy.

mod dense;
mod error;
mod norms;
mod sparse;

pub use dense::{
    kron, qr_thin, solve_right_upper_mat, solve_right_upper_transpose_mat, solve_upper,
    solve_upper_mat, solve_upper_transpose, solve_upper_transpose_mat, unvec, vec_of, DenseMatrix,
};
pub use error::{ComputationError, ErrorKind, Result};
pub use norms::{
    norm2_estimate, norm2_estimate_strict, norm2_exact_small, norm2_power_dense, singular_values,
    NormKind, NormMethod, NormReport, NORM2_DEFAULT_MAX_ITER, NORM2_DEFAULT_TOL,
    SMALL_MATRIX_THRESHOLD,
};
pub use sparse::SparseMatrix;
