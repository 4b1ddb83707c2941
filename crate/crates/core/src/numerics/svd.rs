use nalgebra::SVD;

use super::{ensure_finite, Matrix, Vector};
use crate::error::{Error, Result};

/// Singular values at or below `DEFAULT_RANK_TOL * σ₁` are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Economy SVD truncated to numerical rank `r`.
///
/// `u` is `n×r`, `v` is `m×r` and `s` holds `σ₁ ≥ … ≥ σ_r > 0`.
#[derive(Debug, Clone)]
pub struct SvdTriple {
    pub u: Matrix,
    pub s: Vector,
    pub v: Matrix,
}

impl SvdTriple {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Number of rows of the decomposed matrix.
    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    /// Number of columns of the decomposed matrix.
    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, sigma) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(*sigma);
        }
        us * self.v.transpose()
    }
}

pub fn svd(a: &Matrix, rank_tol: f64) -> Result<SvdTriple> {
    ensure_finite(a, "matrix")?;
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::input(format!("rank_tol must lie in (0, 1), got {rank_tol}")));
    }
    let (n, m) = a.shape();
    let max_iter = 1000 * n.min(m).max(8);
    let dec = SVD::try_new_unordered(a.clone(), true, true, f64::EPSILON * 5.0, max_iter)
        .ok_or_else(|| {
            Error::numerical(format!(
                "SVD of a {n}x{m} matrix did not converge within {max_iter} iterations"
            ))
        })?;
    let u_full = dec.u.expect("left singular vectors requested");
    let vt_full = dec.v_t.expect("right singular vectors requested");

    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));

    let sigma_max = order
        .first()
        .map(|&i| dec.singular_values[i])
        .unwrap_or(0.0);
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| {
            let s = dec.singular_values[i];
            s > 0.0 && s > rank_tol * sigma_max
        })
        .collect();

    let r = kept.len();
    let mut u = Matrix::zeros(n, r);
    let mut v = Matrix::zeros(m, r);
    let mut s = Vector::zeros(r);
    for (dst, &src) in kept.iter().enumerate() {
        u.set_column(dst, &u_full.column(src));
        v.set_column(dst, &vt_full.row(src).transpose());
        s[dst] = dec.singular_values[src];
    }
    Ok(SvdTriple { u, s, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::orthogonality_error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_decomposes_trivially() {
        let a = Matrix::identity(3, 3);
        let d = svd(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.rank(), 3);
        assert!(d.s.iter().all(|&s| (s - 1.0).abs() < 1e-14));
        assert!((d.reconstruct() - a).norm() < 1e-14);
    }

    #[test]
    fn diagonal_values_come_back_sorted() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 3.0, 2.0]));
        let d = svd(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.s.as_slice(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn seeded_random_satisfies_singular_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = Matrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
        let d = svd(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.rank(), 4);
        for j in 0..4 {
            let lhs = &a * d.v.column(j);
            let rhs = d.u.column(j) * d.s[j];
            assert!((lhs - rhs).norm() < 1e-10);
        }
        assert!(orthogonality_error(&d.u) < 1e-10);
        assert!(orthogonality_error(&d.v) < 1e-10);
    }

    #[test]
    fn rank_deficient_is_truncated() {
        // rank one: outer product
        let x = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        let y = Vector::from_vec(vec![1.0, -1.0]);
        let a = &x * y.transpose();
        let d = svd(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.rank(), 1);
        assert!((d.reconstruct() - &a).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut a = Matrix::identity(2, 2);
        a[(1, 0)] = f64::NAN;
        assert!(matches!(svd(&a, DEFAULT_RANK_TOL), Err(Error::Input(_))));
    }
}
