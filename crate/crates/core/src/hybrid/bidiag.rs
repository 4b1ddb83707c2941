//! Golub-Kahan lower bidiagonalization started from the right-hand side.
//!
//! After `k` steps
//!
//! ```text
//! Zᵀ Q_k = P_k B_kᵀ + γ_{k+1} p_{k+1} e_{k+1}ᵀ
//! Z  P_k = Q_k B_k
//! ```
//!
//! with `Q_k` (`n × (k+1)`), `P_k` (`m × k`) orthonormal and `B_k`
//! `(k+1) × k` lower bidiagonal with diagonal `γ_1..γ_k` and subdiagonal
//! `β_2..β_{k+1}`.

use crate::error::{Error, Result};
use crate::numerics::{columns_to_matrix, ensure_finite, Matrix, Vector};

use super::projected::Bidiagonal;

/// Relative threshold (against `‖Z‖_F`) under which a new recurrence
/// coefficient counts as an exact breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Advanced,
    /// The Krylov subspace stopped growing; the current projected problem
    /// already contains the full least-squares solution.
    Breakdown,
}

#[derive(Debug, Clone)]
pub struct BidiagState {
    q: Vec<Vector>,
    p: Vec<Vector>,
    /// `γ_1..γ_k`
    gammas: Vec<f64>,
    /// `β_2..β_{k+1}`
    betas: Vec<f64>,
    beta: f64,
    next_gamma: f64,
    next_p: Vector,
    z_norm: f64,
    reorthogonalize: bool,
    exhausted: bool,
}

impl BidiagState {
    /// Runs the first Golub-Kahan step (`k = 1`) with `q₁ = c/‖c‖`.
    pub fn new(z: &Matrix, c: &Vector, reorthogonalize: bool) -> Result<Self> {
        ensure_finite(z, "feature matrix")?;
        if c.len() != z.nrows() {
            return Err(Error::input(format!(
                "right-hand side has length {} but Z has {} rows",
                c.len(),
                z.nrows()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("right-hand side has non-finite entries"));
        }
        let beta = c.norm();
        if beta == 0.0 {
            return Err(Error::input("zero right-hand side"));
        }
        let z_norm = z.norm();
        let q1 = c / beta;
        let p1 = z.tr_mul(&q1);
        let gamma1 = p1.norm();
        if gamma1 <= BREAKDOWN_TOL * z_norm {
            return Err(Error::input(
                "right-hand side is orthogonal to the range of Z; nothing to fit",
            ));
        }
        let mut state = Self {
            q: vec![q1],
            p: Vec::new(),
            gammas: Vec::new(),
            betas: Vec::new(),
            beta,
            next_gamma: gamma1,
            next_p: p1 / gamma1,
            z_norm,
            reorthogonalize,
            exhausted: false,
        };
        state.advance(z);
        Ok(state)
    }

    /// Extends the factorization by one column. Returns
    /// [`Step::Breakdown`] without changing the state once the subspace is
    /// exhausted.
    pub fn step(&mut self, z: &Matrix) -> Result<Step> {
        if z.shape() != (self.q[0].len(), self.next_p.len()) {
            return Err(Error::input("matrix shape differs from the one used at init"));
        }
        if self.exhausted {
            return Ok(Step::Breakdown);
        }
        self.advance(z);
        Ok(Step::Advanced)
    }

    /// Appends `p_{k+1}`, `γ_{k+1}`, then computes `β_{k+2}`, `q_{k+2}` and
    /// the next `γ`, `p` pair.
    fn advance(&mut self, z: &Matrix) {
        let (n, m) = z.shape();
        let gamma = self.next_gamma;
        let p = std::mem::replace(&mut self.next_p, Vector::zeros(m));
        self.next_gamma = 0.0;

        let k = self.p.len() + 1;
        let last_q = self.q.last().expect("q₁ exists");
        let mut q_new = z * &p - last_q * gamma;
        self.gammas.push(gamma);
        self.p.push(p);

        let tol = BREAKDOWN_TOL * self.z_norm;
        // Q would need k + 1 orthonormal columns in ℝⁿ.
        if k + 1 > n {
            q_new.fill(0.0);
        } else if self.reorthogonalize {
            orthogonalize_against(&mut q_new, &self.q);
        }
        let beta_next = q_new.norm();
        if k + 1 > n || beta_next <= tol {
            self.betas.push(0.0);
            self.q.push(Vector::zeros(n));
            self.exhausted = true;
            return;
        }
        q_new /= beta_next;
        self.betas.push(beta_next);

        let mut p_new = z.tr_mul(&q_new) - self.p.last().expect("just pushed") * beta_next;
        self.q.push(q_new);
        if k + 1 > m {
            self.exhausted = true;
            return;
        }
        if self.reorthogonalize {
            orthogonalize_against(&mut p_new, &self.p);
        }
        let gamma_next = p_new.norm();
        if gamma_next <= tol {
            self.exhausted = true;
            return;
        }
        self.next_gamma = gamma_next;
        self.next_p = p_new / gamma_next;
    }

    /// Current iteration count `k`.
    pub fn k(&self) -> usize {
        self.p.len()
    }

    /// `‖c‖₂`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn next_gamma(&self) -> f64 {
        self.next_gamma
    }

    pub fn next_p(&self) -> &Vector {
        &self.next_p
    }

    /// True once no further step can enlarge the subspace.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn z_norm(&self) -> f64 {
        self.z_norm
    }

    pub fn p_columns(&self) -> &[Vector] {
        &self.p
    }

    pub fn q_columns(&self) -> &[Vector] {
        &self.q
    }

    /// `Q_k`, `n × (k+1)`. After a `β` breakdown the last column is zero.
    pub fn q_matrix(&self) -> Matrix {
        columns_to_matrix(self.q[0].len(), &self.q)
    }

    /// `P_k`, `m × k`.
    pub fn p_matrix(&self) -> Matrix {
        columns_to_matrix(self.next_p.len(), &self.p)
    }

    pub fn bidiagonal(&self) -> Bidiagonal {
        Bidiagonal::new(self.gammas.clone(), self.betas.clone())
            .expect("recurrence keeps diagonal and subdiagonal the same length")
    }

    /// `P_k f` for a coefficient vector of length `k`.
    pub fn expand(&self, f: &Vector) -> Vector {
        let mut w = Vector::zeros(self.next_p.len());
        for (coef, col) in f.iter().zip(&self.p) {
            w.axpy(*coef, col, 1.0);
        }
        w
    }
}

/// Two passes of classical Gram-Schmidt against `basis`.
fn orthogonalize_against(v: &mut Vector, basis: &[Vector]) {
    for _ in 0..2 {
        for b in basis {
            let proj = b.dot(v);
            v.axpy(-proj, b, 1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_with_unit_rhs_breaks_down_immediately() {
        let z = Matrix::identity(3, 3);
        let c = Vector::from_vec(vec![1.0, 0.0, 0.0]);
        let s = BidiagState::new(&z, &c, true).unwrap();
        assert_eq!(s.k(), 1);
        assert_eq!(s.q_columns()[0], c);
        let b = s.bidiagonal().to_dense();
        assert_eq!(b.shape(), (2, 1));
        assert_eq!(b[(0, 0)], 1.0);
        assert_eq!(b[(1, 0)], 0.0);
        assert!(s.is_exhausted());
    }

    #[test]
    fn beta_is_rhs_norm() {
        let z = Matrix::from_fn(4, 3, |i, j| (i + 2 * j) as f64 + 1.0);
        let c = Vector::from_vec(vec![3.0, 4.0, 0.0, 0.0]);
        let s = BidiagState::new(&z, &c, true).unwrap();
        assert_eq!(s.beta(), 5.0);
    }

    #[test]
    fn zero_rhs_is_rejected() {
        let z = Matrix::identity(2, 2);
        let err = BidiagState::new(&z, &Vector::zeros(2), true).unwrap_err();
        assert!(err.to_string().contains("zero right-hand side"));
    }

    #[test]
    fn step_after_exhaustion_reports_breakdown() {
        let z = Matrix::identity(2, 2);
        let mut s = BidiagState::new(&z, &Vector::from_vec(vec![1.0, 0.0]), true).unwrap();
        assert_eq!(s.step(&z).unwrap(), Step::Breakdown);
        assert_eq!(s.k(), 1);
    }

    #[test]
    fn never_exceeds_min_dimension() {
        let z = Matrix::from_fn(6, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.5 * (i == j) as u8 as f64);
        let c = Vector::from_fn(6, |i, _| (i as f64).sin() + 1.5);
        let mut s = BidiagState::new(&z, &c, true).unwrap();
        while s.step(&z).unwrap() == Step::Advanced {}
        assert!(s.k() <= 3);
    }
}
