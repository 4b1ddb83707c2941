//! Regularized least-squares solutions written in the SVD basis of `Z`:
//!
//! `w = Σ_j φ_j (u_jᵀc / σ_j) v_j`
//!
//! with filter factors `φ_j ∈ [0, 1]` chosen per regularizer. The constants
//! match the `1/(2n)` loss normalization used throughout the crate, so a
//! weight-decay `α` here is interchangeable with the one selected by
//! [`crate::hybrid`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SvdTriple, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Filter {
    /// Keep `σ_j > τ`, drop the rest.
    Tsvd(f64),
    /// Gradient flow stopped at time `t`.
    GradientFlow(f64),
    /// Ridge penalty `α²/2 ‖w‖²`.
    WeightDecay(f64),
    None,
}

impl Filter {
    pub fn hyperparameter(&self) -> f64 {
        match *self {
            Filter::Tsvd(v) | Filter::GradientFlow(v) | Filter::WeightDecay(v) => v,
            Filter::None => 0.0,
        }
    }
}

/// A filter bound to the problem size it is applied to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub filter: Filter,
    /// number of samples
    pub n: usize,
    /// feature width
    pub m: usize,
}

impl FilterSpec {
    pub fn new(filter: Filter, n: usize, m: usize) -> Result<Self> {
        let h = filter.hyperparameter();
        if !(h >= 0.0) || !h.is_finite() {
            return Err(Error::input(format!(
                "filter hyperparameter must be finite and non-negative, got {h}"
            )));
        }
        if n == 0 || m == 0 {
            return Err(Error::input("filter needs n >= 1 and m >= 1"));
        }
        Ok(Self { filter, n, m })
    }

    /// Filter sized for the matrix behind `svd`.
    pub fn for_svd(filter: Filter, svd: &SvdTriple) -> Result<Self> {
        Self::new(filter, svd.nrows(), svd.ncols())
    }
}

pub fn filters(spec: &FilterSpec, sigmas: &[f64]) -> Result<Vec<f64>> {
    if sigmas.windows(2).any(|w| w[1] > w[0]) || sigmas.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::input("singular values must be positive and descending"));
    }
    // FilterSpec fields are public, so recheck the hyperparameter here.
    let spec = FilterSpec::new(spec.filter, spec.n, spec.m)?;
    let n = spec.n as f64;
    let nm = n * spec.m as f64;
    let phi = sigmas
        .iter()
        .map(|&s| match spec.filter {
            Filter::Tsvd(tau) => {
                if s > tau {
                    1.0
                } else {
                    0.0
                }
            }
            Filter::GradientFlow(t) => -(-(s * s) * t / nm).exp_m1(),
            Filter::WeightDecay(alpha) => {
                let s2 = s * s;
                s2 / (s2 + n * alpha * alpha)
            }
            Filter::None => 1.0,
        })
        .collect();
    Ok(phi)
}

/// Per-component coefficients `φ_j / σ_j`, the diagonal that maps `Uᵀc`
/// to `Vᵀw`.
pub fn filtered_gains(svd: &SvdTriple, spec: &FilterSpec) -> Result<Vec<f64>> {
    let phi = filters(spec, svd.s.as_slice())?;
    Ok(phi.iter().zip(svd.s.iter()).map(|(p, s)| p / s).collect())
}

pub fn filtered_solution(svd: &SvdTriple, c: &Vector, spec: &FilterSpec) -> Result<Vector> {
    if c.len() != svd.nrows() {
        return Err(Error::input(format!(
            "right-hand side has length {} but Z has {} rows",
            c.len(),
            svd.nrows()
        )));
    }
    let gains = filtered_gains(svd, spec)?;
    let mut coef = svd.u.tr_mul(c);
    for (x, g) in coef.iter_mut().zip(&gains) {
        *x *= g;
    }
    Ok(&svd.v * coef)
}

/// Column-wise [`filtered_solution`] for an `n × n_c` target matrix.
pub fn filtered_solution_multi(svd: &SvdTriple, c: &Matrix, spec: &FilterSpec) -> Result<Matrix> {
    if c.nrows() != svd.nrows() {
        return Err(Error::input(format!(
            "targets have {} rows but Z has {} rows",
            c.nrows(),
            svd.nrows()
        )));
    }
    let gains = filtered_gains(svd, spec)?;
    let mut coef = svd.u.tr_mul(c);
    for (i, g) in gains.iter().enumerate() {
        coef.row_mut(i).scale_mut(*g);
    }
    Ok(&svd.v * coef)
}

/// Explicit Euler for `dw/ds = −(1/n) Zᵀ(Z w − c)`, `w(0) = 0`, run to
/// `s = t/m` so that the result is comparable with
/// [`Filter::GradientFlow`]`(t)`. Slow; meant for checking, not fitting.
pub fn gradient_flow_reference(z: &Matrix, c: &Vector, t: f64, dt: f64) -> Result<Vector> {
    let (n, m) = z.shape();
    if c.len() != n {
        return Err(Error::input(format!("right-hand side has length {} but Z has {n} rows", c.len())));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::input(format!("time must be finite and non-negative, got {t}")));
    }
    let s1 = z.singular_values().max();
    let limit = 2.0 * n as f64 / (s1 * s1);
    if !(dt > 0.0) || dt >= limit {
        return Err(Error::input(format!("step {dt} is not in the stable range (0, {limit:.3e})")));
    }
    let nf = n as f64;
    let gram = z.tr_mul(z) / nf;
    let ztc = z.tr_mul(c) / nf;
    let horizon = t / m as f64;
    let mut w = Vector::zeros(m);
    let mut done = 0.0;
    while done < horizon {
        let h = dt.min(horizon - done);
        let grad = &gram * &w - &ztc;
        w.axpy(-h, &grad, 1.0);
        done += h;
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardRow {
    pub sigma: f64,
    pub coef: f64,
    pub ratio: f64,
}

/// Picard plot data: `(σ_j, |u_jᵀc|, |u_jᵀc|/σ_j)` for `j = 1..r`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PicardData {
    pub rows: Vec<PicardRow>,
}

pub fn picard_data(svd: &SvdTriple, c: &Vector) -> Result<PicardData> {
    if c.len() != svd.nrows() {
        return Err(Error::input(format!(
            "right-hand side has length {} but Z has {} rows",
            c.len(),
            svd.nrows()
        )));
    }
    let proj = svd.u.tr_mul(c);
    let rows = svd
        .s
        .iter()
        .zip(proj.iter())
        .map(|(&sigma, &p)| PicardRow {
            sigma,
            coef: p.abs(),
            ratio: p.abs() / sigma,
        })
        .collect();
    Ok(PicardData { rows })
}

impl PicardData {
    /// Element-wise mean over runs truncated to the shortest rank; the
    /// ratio column is recomputed from the averaged columns.
    pub fn average(runs: &[PicardData]) -> PicardData {
        let len = runs.iter().map(|r| r.rows.len()).min().unwrap_or(0);
        if runs.is_empty() {
            return PicardData::default();
        }
        let cnt = runs.len() as f64;
        let rows = (0..len)
            .map(|j| {
                let sigma = runs.iter().map(|r| r.rows[j].sigma).sum::<f64>() / cnt;
                let coef = runs.iter().map(|r| r.rows[j].coef).sum::<f64>() / cnt;
                PicardRow {
                    sigma,
                    coef,
                    ratio: coef / sigma,
                }
            })
            .collect();
        PicardData { rows }
    }

    /// Median of the ratio column over the first and last tenth of indices
    /// (at least one entry each), returned as `(head, tail)`.
    pub fn decile_medians(&self) -> Option<(f64, f64)> {
        let r = self.rows.len();
        if r == 0 {
            return None;
        }
        let width = (r / 10).max(1);
        let ratios: Vec<f64> = self.rows.iter().map(|row| row.ratio).collect();
        Some((median(&ratios[..width]), median(&ratios[r - width..])))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,sigma,coef,ratio\n");
        for (j, row) in self.rows.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", j + 1, row.sigma, row.coef, row.ratio);
        }
        out
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{svd, DEFAULT_RANK_TOL};
    use proptest::prelude::*;

    fn spec(filter: Filter, n: usize, m: usize) -> FilterSpec {
        FilterSpec::new(filter, n, m).unwrap()
    }

    fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut x = seed;
        Matrix::from_fn(rows, cols, |_, _| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
    }

    #[test]
    fn reference_flow_matches_filter() {
        let z = lcg_matrix(8, 5, 1);
        let c = lcg_matrix(8, 1, 2).column(0).into_owned();
        assert_eq!(gradient_flow_reference(&z, &c, 0.0, 1e-4).unwrap(), Vector::zeros(5));
        let s = svd(&z, DEFAULT_RANK_TOL).unwrap();
        let want = filtered_solution(&s, &c, &spec(Filter::GradientFlow(3.0), 8, 5)).unwrap();
        let got = gradient_flow_reference(&z, &c, 3.0, 1e-4).unwrap();
        assert!((got - &want).norm() <= 1e-4 * want.norm());
    }

    #[test]
    fn reference_flow_long_time_is_min_norm() {
        let z = lcg_matrix(6, 4, 3) + Matrix::identity(6, 4) * 2.0;
        let c = lcg_matrix(6, 1, 4).column(0).into_owned();
        let s = svd(&z, DEFAULT_RANK_TOL).unwrap();
        let want = filtered_solution(&s, &c, &spec(Filter::None, 6, 4)).unwrap();
        let dt = 0.5 * 6.0 / s.s[0].powi(2);
        let got = gradient_flow_reference(&z, &c, 4.0 * 24.0 * 40.0 / s.s[3].powi(2), dt).unwrap();
        assert!((got - &want).norm() <= 1e-4 * want.norm());
    }

    #[test]
    fn reference_flow_rejects_unstable_step() {
        let z = Matrix::identity(3, 3) * 2.0;
        let c = Vector::from_element(3, 1.0);
        // 2n/σ₁² = 1.5
        assert!(matches!(gradient_flow_reference(&z, &c, 1.0, 1.5), Err(Error::Input(_))));
        assert!(gradient_flow_reference(&z, &c, 1.0, 1.4).is_ok());
        assert!(gradient_flow_reference(&z, &c, 1.0, 0.0).is_err());
    }

    #[test]
    fn weight_decay_zero_alpha_keeps_everything() {
        let phi = filters(&spec(Filter::WeightDecay(0.0), 4, 3), &[3.0, 2.0, 0.1]).unwrap();
        assert_eq!(phi, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn weight_decay_balance_point() {
        // n α² = 4 · 0.25 = 1 = σ²
        let phi = filters(&spec(Filter::WeightDecay(0.5), 4, 3), &[1.0]).unwrap();
        assert!((phi[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_flow_unit_time() {
        let (n, m) = (5, 3);
        let phi = filters(&spec(Filter::GradientFlow((n * m) as f64), n, m), &[1.0]).unwrap();
        assert!((phi[0] - 0.632_120_558_8).abs() < 1e-10);
    }

    #[test]
    fn tsvd_zero_threshold_and_ties() {
        let s = [2.0, 1.0, 0.5];
        assert_eq!(filters(&spec(Filter::Tsvd(0.0), 3, 3), &s).unwrap(), vec![1.0; 3]);
        assert_eq!(
            filters(&spec(Filter::Tsvd(1.0), 3, 3), &s).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn negative_hyperparameter_rejected() {
        assert!(FilterSpec::new(Filter::WeightDecay(-1.0), 2, 2).is_err());
        let raw = FilterSpec {
            filter: Filter::GradientFlow(-1.0),
            n: 2,
            m: 2,
        };
        assert!(filters(&raw, &[1.0]).is_err());
    }

    #[test]
    fn identity_system_returns_rhs() {
        let z = Matrix::identity(4, 4);
        let d = svd(&z, DEFAULT_RANK_TOL).unwrap();
        let c = Vector::from_vec(vec![1.0, -2.0, 3.0, 0.5]);
        let w = filtered_solution(&d, &c, &FilterSpec::for_svd(Filter::None, &d).unwrap()).unwrap();
        assert!((w - c).norm() < 1e-14);
    }

    #[test]
    fn hand_weight_decay_on_diagonal() {
        // n = 2, α² = 1/2 gives n α² = 1, φ = (4/5, 1/2)
        let z = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]));
        let d = svd(&z, DEFAULT_RANK_TOL).unwrap();
        let c = Vector::from_vec(vec![4.0, 3.0]);
        let f = FilterSpec::for_svd(Filter::WeightDecay(0.5f64.sqrt()), &d).unwrap();
        let w = filtered_solution(&d, &c, &f).unwrap();
        assert!((w[0] - 1.6).abs() < 1e-14 && (w[1] - 1.5).abs() < 1e-14, "{w}");
    }

    #[test]
    fn picard_identity_and_diagonal() {
        let d = svd(&Matrix::identity(3, 3), DEFAULT_RANK_TOL).unwrap();
        let p = picard_data(&d, &Vector::from_element(3, 1.0)).unwrap();
        assert!(p.rows.iter().all(|r| (r.sigma - 1.0).abs() < 1e-15
            && (r.coef - 1.0).abs() < 1e-15
            && (r.ratio - 1.0).abs() < 1e-15));

        let z = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]));
        let d = svd(&z, DEFAULT_RANK_TOL).unwrap();
        let p = picard_data(&d, &Vector::from_vec(vec![2.0, 1.0])).unwrap();
        assert_eq!(p.rows.len(), 2);
        assert_eq!((p.rows[0].sigma, p.rows[0].coef, p.rows[0].ratio), (2.0, 2.0, 1.0));
        assert_eq!((p.rows[1].sigma, p.rows[1].coef, p.rows[1].ratio), (1.0, 1.0, 1.0));
        assert!(p.to_csv().starts_with("j,sigma,coef,ratio\n1,2,2,1\n"));
    }

    #[test]
    fn dimension_mismatch() {
        let d = svd(&Matrix::identity(3, 3), DEFAULT_RANK_TOL).unwrap();
        let f = FilterSpec::for_svd(Filter::None, &d).unwrap();
        assert!(filtered_solution(&d, &Vector::zeros(2), &f).is_err());
        assert!(picard_data(&d, &Vector::zeros(4)).is_err());
    }

    fn descending(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(1e-6f64..1e3, 1..max_len).prop_map(|mut v| {
            v.sort_by(|a, b| b.total_cmp(a));
            v
        })
    }

    proptest! {
        #[test]
        fn factors_are_bounded_and_ordered(
            s in descending(30),
            h in 0.0f64..1e3,
            n in 1usize..500,
            m in 1usize..500,
        ) {
            for filter in [Filter::GradientFlow(h), Filter::WeightDecay(h), Filter::Tsvd(h)] {
                let phi = filters(&spec(filter, n, m), &s).unwrap();
                prop_assert!(phi.iter().all(|&p| (0.0..=1.0).contains(&p)));
                prop_assert!(phi.windows(2).all(|w| w[1] <= w[0]));
            }
        }

        #[test]
        fn factors_are_monotone_in_hyperparameter(
            s in descending(20),
            h in 1e-6f64..1e2,
            scale in 1.0f64..10.0,
        ) {
            let small_t = filters(&spec(Filter::GradientFlow(h), 10, 10), &s).unwrap();
            let large_t = filters(&spec(Filter::GradientFlow(h * scale), 10, 10), &s).unwrap();
            prop_assert!(small_t.iter().zip(&large_t).all(|(a, b)| b >= a));
            let small_a = filters(&spec(Filter::WeightDecay(h), 10, 10), &s).unwrap();
            let large_a = filters(&spec(Filter::WeightDecay(h * scale), 10, 10), &s).unwrap();
            prop_assert!(small_a.iter().zip(&large_a).all(|(a, b)| b <= a));
        }
    }
}
