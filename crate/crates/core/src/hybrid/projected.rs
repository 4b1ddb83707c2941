//! The small projected problem
//!
//! `min_f (1/2n) ‖B f − β e₁‖² + (α²/2) ‖f‖²`
//!
//! on a `(k+1) × k` lower bidiagonal `B`, its GCV function and the
//! selection of `α`.
//!
//! GCV only needs the singular values `s_i` of `B` and the first row of its
//! left singular vectors. Those come from an implicit-shift bidiagonal QR
//! that applies its left rotations to `e₁` instead of accumulating the full
//! singular vector matrices, so one spectrum costs `O(k²)`.

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{minimize_scalar_with, Matrix, ScalarOptions, Vector};

/// `(k+1) × k` lower bidiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Bidiagonal {
    /// `B[i][i]`, length `k`
    diag: Vec<f64>,
    /// `B[i+1][i]`, length `k`
    sub: Vec<f64>,
}

impl Bidiagonal {
    pub fn new(diag: Vec<f64>, sub: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || diag.len() != sub.len() {
            return Err(Error::input(format!(
                "lower bidiagonal needs k >= 1 diagonal and k subdiagonal entries, got {} and {}",
                diag.len(),
                sub.len()
            )));
        }
        if diag.iter().chain(&sub).any(|v| !v.is_finite()) {
            return Err(Error::input("bidiagonal has non-finite entries"));
        }
        Ok(Self { diag, sub })
    }

    pub fn k(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn sub(&self) -> &[f64] {
        &self.sub
    }

    pub fn to_dense(&self) -> Matrix {
        let k = self.k();
        let mut b = Matrix::zeros(k + 1, k);
        for i in 0..k {
            b[(i, i)] = self.diag[i];
            b[(i + 1, i)] = self.sub[i];
        }
        b
    }

    /// `B f`, length `k + 1`.
    pub fn apply(&self, f: &Vector) -> Vector {
        let k = self.k();
        let mut out = Vector::zeros(k + 1);
        for i in 0..k {
            out[i] += self.diag[i] * f[i];
            out[i + 1] += self.sub[i] * f[i];
        }
        out
    }

    pub fn spectrum(&self) -> Result<ProjectedSpectrum> {
        ProjectedSpectrum::of(self)
    }
}

/// Singular values of `B` together with the first components of the
/// corresponding left singular vectors.
#[derive(Debug, Clone)]
pub struct ProjectedSpectrum {
    /// `s_i`, descending
    pub singular_values: Vec<f64>,
    /// `P̃[0][i]` for the left singular vector paired with `s_i`
    pub lead: Vec<f64>,
    /// `P̃[0][k]`, the component of `e₁` outside the range of `B`
    pub tail: f64,
    /// `B` has a zero last row (exact Krylov subspace)
    pub closed: bool,
}

impl ProjectedSpectrum {
    pub fn of(b: &Bidiagonal) -> Result<Self> {
        let k = b.k();
        // Left rotations reduce B to upper bidiagonal R (diag d, super e);
        // `t` tracks Q̂ᵀ e₁.
        let mut d = vec![0.0; k];
        let mut e = vec![0.0; k.saturating_sub(1)];
        let mut t = vec![0.0; k + 1];
        t[0] = 1.0;
        let mut carry = b.diag[0];
        for i in 0..k {
            let (c, s, r) = givens(carry, b.sub[i]);
            d[i] = r;
            rotate(&mut t, i, i + 1, c, s);
            if i + 1 < k {
                let g = b.diag[i + 1];
                e[i] = s * g;
                carry = c * g;
            }
        }
        let tail = t[k];
        t.truncate(k);
        let scale = d.iter().chain(&e).fold(0.0f64, |acc, v| acc.max(v.abs()));
        bidiagonal_svd(&mut d, &mut e, &mut t, scale)?;

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| d[j].abs().total_cmp(&d[i].abs()));
        Ok(Self {
            singular_values: order.iter().map(|&i| d[i].abs()).collect(),
            lead: order.iter().map(|&i| t[i]).collect(),
            tail,
            closed: b.sub[k - 1] == 0.0,
        })
    }

    pub fn k(&self) -> usize {
        self.singular_values.len()
    }

    /// `1 − d_i = nα² / (s_i² + nα²)`, the complements of the eigenvalues
    /// of the influence matrix `B B†_α`, formed without cancellation. Zero
    /// singular values give 1.
    fn complements(&self, alpha: f64, n: usize) -> impl Iterator<Item = f64> + '_ {
        let damp = n as f64 * alpha * alpha;
        self.singular_values.iter().map(move |&s| {
            let s2 = s * s;
            if s2 == 0.0 {
                1.0
            } else {
                damp / (s2 + damp)
            }
        })
    }

    /// `G(α) = k ‖(I − B B†_α) β e₁‖² / trace(I − B B†_α)²`.
    ///
    /// When the last subdiagonal entry is exactly zero the left basis has
    /// only `k` columns and the trace runs over those.
    pub fn gcv(&self, beta: f64, alpha: f64, n: usize) -> Result<f64> {
        if !(alpha >= 0.0) {
            return Err(Error::input(format!("alpha must be non-negative, got {alpha}")));
        }
        let k = self.k() as f64;
        let mut resid = self.tail * self.tail;
        let mut trace = if self.closed { 0.0 } else { 1.0 };
        for (e, lead) in self.complements(alpha, n).zip(&self.lead) {
            resid += (e * lead).powi(2);
            trace += e;
        }
        let denom = trace * trace;
        if !(denom > f64::MIN_POSITIVE) {
            return Err(Error::numerical(format!(
                "GCV denominator underflow at alpha = {alpha} (trace = {trace})"
            )));
        }
        Ok(k * beta * beta * resid / denom)
    }
}

pub fn gcv_value(b: &Bidiagonal, beta: f64, alpha: f64, n: usize) -> Result<f64> {
    b.spectrum()?.gcv(beta, alpha, n)
}

/// Minimizer `f_α = β B†_α e₁` of the projected weight-decay problem, with
/// `B†_α = (1/n)(BᵀB/n + α²I)⁻¹Bᵀ`.
///
/// Solved as the stacked least-squares problem `[B; √n α I] f ≈ [β e₁; 0]`
/// by Givens QR. A singular system at `α = 0` falls back to the
/// minimum-norm solution from the SVD of `B`.
pub fn projected_tikhonov(b: &Bidiagonal, beta: f64, alpha: f64, n: usize) -> Result<Vector> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::input(format!("alpha must be finite and non-negative, got {alpha}")));
    }
    let k = b.k();
    let damp = (n as f64).sqrt() * alpha;
    let mut rho = vec![0.0; k];
    let mut theta = vec![0.0; k.saturating_sub(1)];
    let mut phi = vec![0.0; k];
    let mut rho_bar = b.diag[0];
    let mut phi_bar = beta;
    for i in 0..k {
        // fold the damping row for column i into the running row
        let (c1, _, r1) = givens(rho_bar, damp);
        phi_bar *= c1;
        // then eliminate the subdiagonal entry below it
        let (c, s, r) = givens(r1, b.sub[i]);
        rho[i] = r;
        phi[i] = c * phi_bar;
        phi_bar *= -s;
        if i + 1 < k {
            let g = b.diag[i + 1];
            theta[i] = s * g;
            rho_bar = c * g;
        }
    }

    let scale = rho.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 || rho.iter().any(|r| r.abs() <= f64::EPSILON * scale * k as f64) {
        if damp > 0.0 {
            return Err(Error::numerical("damped projected system is singular"));
        }
        return min_norm_projected(b, beta);
    }
    let mut f = Vector::zeros(k);
    for i in (0..k).rev() {
        let mut acc = phi[i];
        if i + 1 < k {
            acc -= theta[i] * f[i + 1];
        }
        f[i] = acc / rho[i];
    }
    Ok(f)
}

fn min_norm_projected(b: &Bidiagonal, beta: f64) -> Result<Vector> {
    let dense = b.to_dense();
    let k = b.k();
    let dec = SVD::try_new(dense, true, true, f64::EPSILON * 5.0, 1000 * (k + 1))
        .ok_or_else(|| Error::numerical("SVD of the projected bidiagonal did not converge"))?;
    let mut rhs = Vector::zeros(k + 1);
    rhs[0] = beta;
    let tol = f64::EPSILON * (k + 1) as f64 * dec.singular_values.max();
    dec.solve(&rhs, tol)
        .map_err(|e| Error::numerical(format!("projected min-norm solve failed: {e}")))
}

/// Search range and grid for GCV minimization over `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearch {
    pub lo: f64,
    /// Upper end; `None` means `s₁/√n`, where every filter factor drops
    /// below one half.
    pub hi: Option<f64>,
    pub grid_points: usize,
    /// Golden-section evaluation budget for the refinement step.
    pub refine_evals: usize,
}

impl Default for AlphaSearch {
    fn default() -> Self {
        Self {
            lo: 1e-12,
            hi: None,
            grid_points: 31,
            refine_evals: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaChoice {
    pub alpha: f64,
    pub gcv: f64,
    /// best value seen on the coarse grid alone
    pub grid_gcv: f64,
}

pub fn select_alpha(b: &Bidiagonal, beta: f64, n: usize, search: &AlphaSearch) -> Result<AlphaChoice> {
    select_alpha_from(&b.spectrum()?, beta, n, search)
}

/// Log-grid scan of `G(α)` followed by golden-section refinement (in
/// `log α`) on the two grid cells around the best grid point.
pub fn select_alpha_from(
    spec: &ProjectedSpectrum,
    beta: f64,
    n: usize,
    search: &AlphaSearch,
) -> Result<AlphaChoice> {
    if !(search.lo > 0.0) || search.grid_points < 2 {
        return Err(Error::input("alpha search needs lo > 0 and at least 2 grid points"));
    }
    let s1 = spec.singular_values.first().copied().unwrap_or(0.0);
    let hi = search
        .hi
        .unwrap_or(s1 / (n as f64).sqrt())
        .max(search.lo * 10.0);
    let (llo, lhi) = (search.lo.ln(), hi.ln());
    let pts = search.grid_points;
    let grid: Vec<f64> = (0..pts)
        .map(|i| llo + (lhi - llo) * i as f64 / (pts - 1) as f64)
        .collect();
    let alpha_at = |i: usize| match i {
        0 => search.lo,
        _ if i == pts - 1 => hi,
        _ => grid[i].exp(),
    };

    let mut best_i = 0;
    let mut best_g = f64::INFINITY;
    for i in 0..pts {
        let g = spec.gcv(beta, alpha_at(i), n)?;
        if g < best_g {
            best_g = g;
            best_i = i;
        }
    }
    let grid_gcv = best_g;
    let mut alpha = alpha_at(best_i);
    let mut gcv = best_g;

    if best_g > 0.0 && search.refine_evals >= 4 {
        let a = grid[best_i.saturating_sub(1)];
        let b = grid[(best_i + 1).min(pts - 1)];
        let mut failure = None;
        let refined = minimize_scalar_with(
            |la| match spec.gcv(beta, la.exp(), n) {
                Ok(g) => g,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            a,
            b,
            &ScalarOptions {
                tol: Some(1e-6 * (b - a)),
                max_evals: search.refine_evals,
            },
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let refined = refined?;
        if refined.fx < gcv {
            gcv = refined.fx;
            alpha = refined.x.exp();
        }
    }
    Ok(AlphaChoice { alpha, gcv, grid_gcv })
}

/// Returns `(c, s, r)` with `[c s; −s c] [a; b] = [r; 0]`.
fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    if b == 0.0 {
        (1.0, 0.0, a)
    } else if a == 0.0 {
        (0.0, 1.0, b)
    } else {
        let r = a.hypot(b);
        (a / r, b / r, r)
    }
}

fn rotate(v: &mut [f64], i: usize, j: usize, c: f64, s: f64) {
    let (x, y) = (v[i], v[j]);
    v[i] = c * x + s * y;
    v[j] = -s * x + c * y;
}

/// Singular values of the upper bidiagonal `(d, e)` in place, applying every
/// left rotation to `t` as well (so `t ← Uᵀ t`). Signs of `d` are left
/// as they fall.
fn bidiagonal_svd(d: &mut [f64], e: &mut [f64], t: &mut [f64], scale: f64) -> Result<()> {
    let k = d.len();
    if k <= 1 || scale == 0.0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let mut sweeps = 0usize;
    let max_sweeps = 100 * k;
    let mut hi = k - 1;
    while hi > 0 {
        for v in d.iter_mut() {
            if v.abs() <= eps * scale {
                *v = 0.0;
            }
        }
        for i in 0..hi {
            if e[i].abs() <= eps * (d[i].abs() + d[i + 1].abs()) {
                e[i] = 0.0;
            }
        }
        if e[hi - 1] == 0.0 {
            hi -= 1;
            continue;
        }
        let mut lo = hi - 1;
        while lo > 0 && e[lo - 1] != 0.0 {
            lo -= 1;
        }

        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(Error::numerical(format!(
                "bidiagonal QR did not converge in {max_sweeps} sweeps (k = {k})"
            )));
        }

        if let Some(z) = (lo..hi).find(|&i| d[i] == 0.0) {
            chase_zero_diagonal_row(d, e, t, z, hi);
            continue;
        }
        if d[hi] == 0.0 {
            chase_zero_last_column(d, e, lo, hi);
            continue;
        }
        qr_sweep(d, e, t, lo, hi);
    }
    Ok(())
}

/// `d[z] = 0`: zero `e[z]` with left rotations against rows `z+1..=hi`.
fn chase_zero_diagonal_row(d: &mut [f64], e: &mut [f64], t: &mut [f64], z: usize, hi: usize) {
    let mut x = e[z];
    e[z] = 0.0;
    for j in z + 1..=hi {
        let (c, s, r) = givens(d[j], x);
        d[j] = r;
        rotate(t, j, z, c, s);
        if j < hi {
            x = -s * e[j];
            e[j] *= c;
        }
    }
}

/// `d[hi] = 0`: zero `e[hi−1]` with right rotations walking upward.
fn chase_zero_last_column(d: &mut [f64], e: &mut [f64], lo: usize, hi: usize) {
    let mut x = e[hi - 1];
    e[hi - 1] = 0.0;
    let mut j = hi - 1;
    loop {
        let (c, s, r) = givens(d[j], x);
        d[j] = r;
        if j == lo {
            break;
        }
        x = -s * e[j - 1];
        e[j - 1] *= c;
        j -= 1;
    }
}

/// One implicit-shift Golub-Kahan step on the unreduced block `lo..=hi`.
fn qr_sweep(d: &mut [f64], e: &mut [f64], t: &mut [f64], lo: usize, hi: usize) {
    // Wilkinson shift from the trailing 2x2 of BᵀB
    let dm = d[hi - 1];
    let dn = d[hi];
    let fm = e[hi - 1];
    let fmm = if hi - 1 > lo { e[hi - 2] } else { 0.0 };
    let t11 = dm * dm + fmm * fmm;
    let t12 = dm * fm;
    let t22 = dn * dn + fm * fm;
    let delta = 0.5 * (t11 - t22);
    let denom = delta + delta.signum() * delta.hypot(t12);
    let mu = if denom == 0.0 { t22 } else { t22 - t12 * t12 / denom };

    let mut y = d[lo] * d[lo] - mu;
    let mut z = d[lo] * e[lo];
    for j in lo..hi {
        // right rotation on columns j, j+1
        let (c, s, r) = givens(y, z);
        if j > lo {
            e[j - 1] = r;
        }
        let dj = c * d[j] + s * e[j];
        e[j] = -s * d[j] + c * e[j];
        let bulge = s * d[j + 1];
        d[j + 1] *= c;

        // left rotation on rows j, j+1
        let (c, s, r) = givens(dj, bulge);
        d[j] = r;
        rotate(t, j, j + 1, c, s);
        let ej = c * e[j] + s * d[j + 1];
        d[j + 1] = -s * e[j] + c * d[j + 1];
        e[j] = ej;
        if j + 1 < hi {
            y = e[j];
            z = s * e[j + 1];
            e[j + 1] *= c;
        }
    }
}
