//! Dense kernels shared by the rest of the crate: SVD with numerical rank,
//! golden-section minimization, and a few vector helpers.

mod scalar;
mod svd;

pub use scalar::{minimize_scalar, minimize_scalar_with, ScalarMinimum, ScalarOptions};
pub use svd::{svd, SvdTriple, DEFAULT_RANK_TOL};

use crate::error::{Error, Result};

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

/// Rejects empty matrices and matrices holding NaN or infinities.
pub fn ensure_finite(a: &Matrix, what: &str) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::input(format!("{what} is empty ({}x{})", a.nrows(), a.ncols())));
    }
    if let Some(pos) = a.iter().position(|v| !v.is_finite()) {
        let (i, j) = (pos % a.nrows(), pos / a.nrows());
        return Err(Error::input(format!("{what} has a non-finite entry at ({i}, {j})")));
    }
    Ok(())
}

/// Largest absolute deviation of `QᵀQ` from the identity.
pub fn orthogonality_error(q: &Matrix) -> f64 {
    let gram = q.tr_mul(q);
    let mut worst = 0.0f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Copies the columns of `cols` (all of length `rows`) into a dense matrix.
pub fn columns_to_matrix(rows: usize, cols: &[Vector]) -> Matrix {
    let mut out = Matrix::zeros(rows, cols.len());
    for (j, col) in cols.iter().enumerate() {
        out.set_column(j, col);
    }
    out
}
