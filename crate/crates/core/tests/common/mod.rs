//! Independent reference computations used by the integration and
//! acceptance tests. Nothing here calls the SVD-based code paths it checks.

#![allow(dead_code)]

use hybrid_rfm::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec(len: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

pub fn rel_err(got: &Vector, want: &Vector) -> f64 {
    (got - want).norm() / want.norm().max(f64::MIN_POSITIVE)
}

pub fn rel_err_mat(got: &Matrix, want: &Matrix) -> f64 {
    (got - want).norm() / want.norm().max(f64::MIN_POSITIVE)
}

/// Solves `(ZᵀZ/n + α²I) w = Zᵀc/n` by LU on the normal equations, or on
/// the equivalent `w = Zᵀ(ZZᵀ/n + α²I)⁻¹c/n` when `Z` is wide.
pub fn dense_weight_decay(z: &Matrix, c: &Vector, alpha: f64) -> Vector {
    let n = z.nrows() as f64;
    let m = z.ncols();
    if m > z.nrows() {
        let a = z * z.transpose() / n + Matrix::identity(z.nrows(), z.nrows()) * (alpha * alpha);
        let y = a.lu().solve(&(c / n)).expect("regularized Gram matrix is nonsingular");
        return z.tr_mul(&y);
    }
    let a = z.tr_mul(z) / n + Matrix::identity(m, m) * (alpha * alpha);
    let rhs = z.tr_mul(c) / n;
    a.lu().solve(&rhs).expect("regularized normal equations are nonsingular")
}

/// Largest eigenvalue of `ZᵀZ` by power iteration.
pub fn top_sigma_squared(z: &Matrix) -> f64 {
    let g = z.tr_mul(z);
    let mut v = Vector::from_element(g.ncols(), 1.0);
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w = &g * &v;
        let next = w.norm();
        v = w / next;
        if (next - lambda).abs() <= 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

/// Explicit Euler for `dw/ds = −(1/n) Zᵀ(Z w − c)`, `w(0) = 0`, integrated
/// to `s = horizon` with step `dt` (last step shortened to land exactly).
pub fn euler_gradient_flow(z: &Matrix, c: &Vector, horizon: f64, dt: f64) -> Vector {
    let n = z.nrows() as f64;
    let ztc = z.tr_mul(c) / n;
    let g = z.tr_mul(z) / n;
    let mut w = Vector::zeros(z.ncols());
    let mut s = 0.0;
    while s < horizon {
        let h = dt.min(horizon - s);
        let grad = &g * &w - &ztc;
        w.axpy(-h, &grad, 1.0);
        s += h;
    }
    w
}

/// GCV of the projected problem from explicit dense matrices and an
/// explicit trace.
pub fn dense_gcv(b: &Matrix, beta: f64, alpha: f64, n: usize) -> f64 {
    let (rows, k) = b.shape();
    let nf = n as f64;
    let inner = b.tr_mul(b) / nf + Matrix::identity(k, k) * (alpha * alpha);
    let pinv = inner.lu().try_inverse().expect("invertible") * b.transpose() / nf;
    let a = Matrix::identity(rows, rows) - b * pinv;
    let mut e1 = Vector::zeros(rows);
    e1[0] = beta;
    let r = &a * e1;
    k as f64 * r.norm_squared() / a.trace().powi(2)
}

/// Minimizer of `(1/2n)‖B f − β e₁‖² + (α²/2)‖f‖²` by normal equations.
pub fn dense_projected_minimizer(b: &Matrix, beta: f64, alpha: f64, n: usize) -> Vector {
    let nf = n as f64;
    let k = b.ncols();
    let a = b.tr_mul(b) / nf + Matrix::identity(k, k) * (alpha * alpha);
    let mut e1 = Vector::zeros(b.nrows());
    e1[0] = beta;
    a.lu().solve(&(b.tr_mul(&e1) / nf)).expect("nonsingular")
}

/// Residual of projecting `w` onto the Krylov space
/// `span{Zᵀc, (ZᵀZ)Zᵀc, …}` of dimension `k`, relative to `‖w‖`.
pub fn krylov_residual(z: &Matrix, c: &Vector, k: usize, w: &Vector) -> f64 {
    let g = z.tr_mul(z);
    let mut v = z.tr_mul(c);
    let mut basis: Vec<Vector> = Vec::new();
    for _ in 0..k {
        let mut u = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&u);
                u.axpy(-d, q, 1.0);
            }
        }
        let nu = u.norm();
        if nu > 1e-12 * v.norm() {
            basis.push(u / nu);
        }
        v = &g * &v;
        v /= v.norm();
    }
    let mut r = w.clone();
    for q in &basis {
        let d = q.dot(&r);
        r.axpy(-d, q, 1.0);
    }
    r.norm() / w.norm().max(f64::MIN_POSITIVE)
}

/// Random lower bidiagonal entries bounded away from zero.
pub fn random_bidiagonal(k: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let diag = (0..k).map(|_| rng.random_range(0.2..2.0)).collect();
    let sub = (0..k).map(|_| rng.random_range(0.2..2.0)).collect();
    (diag, sub)
}

/// Three 2×2 images with labels 7, 0, 9.
pub fn mnist_fixture() -> (Vec<u8>, Vec<u8>) {
    let mut img = vec![0, 0, 8, 3, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0, 2];
    img.extend_from_slice(&[0, 255, 128, 1, 10, 20, 30, 40, 255, 255, 0, 0]);
    let lab = vec![0, 0, 8, 1, 0, 0, 0, 3, 7, 0, 9];
    (img, lab)
}

pub fn cifar_fixture(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    for (r, &l) in labels.iter().enumerate() {
        out.push(l);
        out.extend((0..3072).map(|j| ((j * 7 + r * 31) % 256) as u8));
    }
    out
}
