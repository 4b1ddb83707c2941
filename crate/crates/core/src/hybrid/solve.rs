use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bidiag::{BidiagState, Step};
use super::projected::{projected_tikhonov, select_alpha_from, AlphaSearch};
use crate::error::{Error, Result};
use crate::numerics::{ensure_finite, Matrix, Vector};

/// Hard cap on the default iteration budget.
pub const DEFAULT_MAX_ITERS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridOptions {
    /// Iteration budget; `None` means `min(m, n, 1024)`.
    pub max_iters: Option<usize>,
    /// Stop once `|G_k − G_{k−1}| ≤ gcv_stop_tol · G_1`. Zero disables.
    pub gcv_stop_tol: f64,
    pub alpha_search: AlphaSearch,
    pub reorthogonalize: bool,
    /// Skip GCV and use this weight decay at every iteration.
    pub fixed_alpha: Option<f64>,
}

impl Default for HybridOptions {
    fn default() -> Self {
        Self {
            max_iters: None,
            gcv_stop_tol: 0.0,
            alpha_search: AlphaSearch::default(),
            reorthogonalize: true,
            fixed_alpha: None,
        }
    }
}

impl HybridOptions {
    pub fn budget(&self, n: usize, m: usize) -> usize {
        self.max_iters
            .unwrap_or_else(|| DEFAULT_MAX_ITERS.min(n).min(m))
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == Some(0) {
            return Err(Error::input("max_iters must be at least 1"));
        }
        if !(self.gcv_stop_tol >= 0.0) {
            return Err(Error::input("gcv_stop_tol must be non-negative"));
        }
        if let Some(a) = self.fixed_alpha {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::input(format!("fixed_alpha must be finite and >= 0, got {a}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    GcvFlat,
    Breakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub alpha: f64,
    /// GCV value at `alpha`; `NaN` only if it could not be evaluated for a
    /// fixed `alpha`.
    pub gcv: f64,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridTrace {
    pub iterations: Vec<IterationRecord>,
    pub stop_reason: StopReason,
}

impl HybridTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,alpha,gcv,train_loss,test_loss\n");
        for r in &self.iterations {
            let test = r.test_loss.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", r.k, r.alpha, r.gcv, r.train_loss, test);
        }
        out
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.iterations.last()
    }
}

#[derive(Debug, Clone)]
pub struct HybridSolution {
    pub w: Vector,
    pub trace: HybridTrace,
}

/// Held-out data watched per iteration; requires materializing `w_k` in
/// the test space at every step.
#[derive(Debug, Clone, Copy)]
pub struct TestMonitor<'a> {
    pub z_test: &'a Matrix,
    pub c_test: &'a Vector,
}

pub fn hybrid_solve(z: &Matrix, c: &Vector, opts: &HybridOptions) -> Result<HybridSolution> {
    hybrid_solve_monitored(z, c, opts, None)
}

pub fn hybrid_solve_monitored(
    z: &Matrix,
    c: &Vector,
    opts: &HybridOptions,
    monitor: Option<TestMonitor<'_>>,
) -> Result<HybridSolution> {
    opts.validate()?;
    let (n, m) = z.shape();
    if let Some(mon) = &monitor {
        if mon.z_test.ncols() != m || mon.z_test.nrows() != mon.c_test.len() {
            return Err(Error::input("test monitor shapes do not match Z"));
        }
    }
    let budget = opts.budget(n, m);
    let mut state = BidiagState::new(z, c, opts.reorthogonalize)?;
    let beta = state.beta();
    let n_inv = 1.0 / (2.0 * n as f64);

    // Z_test p_j, grown alongside P_k
    let mut test_cols: Vec<Vector> = Vec::new();
    let mut records = Vec::new();
    let mut first_gcv = None;
    let mut prev_gcv: Option<f64> = None;

    let stop = loop {
        let k = state.k();
        let b = state.bidiagonal();
        let spectrum = b.spectrum()?;
        let (alpha, gcv) = match opts.fixed_alpha {
            Some(a) => (a, spectrum.gcv(beta, a, n).unwrap_or(f64::NAN)),
            None => {
                let choice = select_alpha_from(&spectrum, beta, n, &opts.alpha_search)?;
                (choice.alpha, choice.gcv)
            }
        };
        let f = projected_tikhonov(&b, beta, alpha, n)?;
        let mut resid = b.apply(&f);
        resid[0] -= beta;
        let train_loss = resid.norm_squared() * n_inv;

        let test_loss = match &monitor {
            Some(mon) => {
                while test_cols.len() < k {
                    let j = test_cols.len();
                    test_cols.push(mon.z_test * &state.p_columns()[j]);
                }
                let mut pred = -mon.c_test.clone();
                for (coef, col) in f.iter().zip(&test_cols) {
                    pred.axpy(*coef, col, 1.0);
                }
                Some(pred.norm_squared() / (2.0 * mon.c_test.len() as f64))
            }
            None => None,
        };
        records.push(IterationRecord {
            k,
            alpha,
            gcv,
            train_loss,
            test_loss,
        });

        let g1 = *first_gcv.get_or_insert(gcv);
        if opts.gcv_stop_tol > 0.0 {
            if let Some(prev) = prev_gcv {
                if (gcv - prev).abs() <= opts.gcv_stop_tol * g1 {
                    break (StopReason::GcvFlat, f);
                }
            }
        }
        prev_gcv = Some(gcv);
        if k >= budget {
            break (StopReason::Budget, f);
        }
        if state.step(z)? == Step::Breakdown {
            break (StopReason::Breakdown, f);
        }
    };

    let (stop_reason, f) = stop;
    Ok(HybridSolution {
        w: state.expand(&f),
        trace: HybridTrace {
            iterations: records,
            stop_reason,
        },
    })
}

#[derive(Debug, Clone)]
pub struct MultiSolution {
    /// `m × n_c`
    pub w: Matrix,
    /// One trace per target column; `None` for zero columns.
    pub traces: Vec<Option<HybridTrace>>,
    pub warnings: Vec<String>,
}

/// Solves every column of `C` independently (in parallel) against the
/// shared `Z`. All-zero columns get a zero solution and a warning.
pub fn hybrid_solve_multi(z: &Matrix, c: &Matrix, opts: &HybridOptions) -> Result<MultiSolution> {
    hybrid_solve_multi_monitored(z, c, opts, None)
}

pub fn hybrid_solve_multi_monitored(
    z: &Matrix,
    c: &Matrix,
    opts: &HybridOptions,
    test: Option<(&Matrix, &Matrix)>,
) -> Result<MultiSolution> {
    ensure_finite(z, "feature matrix")?;
    if c.nrows() != z.nrows() {
        return Err(Error::input(format!(
            "targets have {} rows but Z has {}",
            c.nrows(),
            z.nrows()
        )));
    }
    if let Some((zt, ct)) = test {
        if ct.ncols() != c.ncols() || zt.nrows() != ct.nrows() {
            return Err(Error::input("test targets do not match training targets"));
        }
    }
    let m = z.ncols();
    let solved: Vec<(usize, Result<Option<HybridSolution>>)> = (0..c.ncols())
        .into_par_iter()
        .map(|j| {
            let col: Vector = c.column(j).into_owned();
            if col.iter().all(|&v| v == 0.0) {
                return (j, Ok(None));
            }
            let test_col = test.map(|(_, ct)| ct.column(j).into_owned());
            let monitor = test.zip(test_col.as_ref()).map(|((zt, _), ctc)| TestMonitor {
                z_test: zt,
                c_test: ctc,
            });
            (j, hybrid_solve_monitored(z, &col, opts, monitor).map(Some))
        })
        .collect();

    let mut w = Matrix::zeros(m, c.ncols());
    let mut traces = Vec::with_capacity(c.ncols());
    let mut warnings = Vec::new();
    for (j, res) in solved {
        match res.map_err(|e| match e {
            Error::Input(msg) => Error::Input(format!("target column {j}: {msg}")),
            Error::Numerical(msg) => Error::Numerical(format!("target column {j}: {msg}")),
            other => other,
        })? {
            Some(sol) => {
                w.set_column(j, &sol.w);
                traces.push(Some(sol.trace));
            }
            None => {
                warnings.push(format!("target column {j} is all zeros; its weights are set to zero"));
                traces.push(None);
            }
        }
    }
    Ok(MultiSolution {
        w,
        traces,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_one_step_shrinks_rhs() {
        let z = Matrix::identity(4, 4);
        let c = Vector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
        let opts = HybridOptions {
            max_iters: Some(1),
            ..HybridOptions::default()
        };
        let sol = hybrid_solve(&z, &c, &opts).unwrap();
        assert_eq!(sol.trace.iterations.len(), 1);
        let ratio = sol.w.dot(&c) / c.norm_squared();
        assert!(ratio > 0.0 && ratio <= 1.0 + 1e-12);
        assert!((&sol.w - &c * ratio).norm() < 1e-12);
    }

    #[test]
    fn zero_columns_get_warnings() {
        let z = Matrix::from_fn(5, 3, |i, j| 1.0 + (i * 3 + j) as f64 % 4.0);
        let mut c = Matrix::zeros(5, 2);
        c[(0, 1)] = 1.0;
        c[(3, 1)] = 1.0;
        let sol = hybrid_solve_multi(&z, &c, &HybridOptions::default()).unwrap();
        assert!(sol.traces[0].is_none());
        assert!(sol.traces[1].is_some());
        assert_eq!(sol.warnings.len(), 1);
        assert!(sol.w.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn default_budget() {
        let o = HybridOptions::default();
        assert_eq!(o.budget(256, 1024), 256);
        assert_eq!(o.budget(5000, 3000), 1024);
        assert_eq!(o.budget(10, 4), 4);
    }

    #[test]
    fn zero_budget_is_rejected() {
        let opts = HybridOptions {
            max_iters: Some(0),
            ..HybridOptions::default()
        };
        let z = Matrix::identity(2, 2);
        assert!(hybrid_solve(&z, &Vector::from_vec(vec![1.0, 1.0]), &opts).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let z = Matrix::identity(3, 3);
        let sol = hybrid_solve(&z, &Vector::from_vec(vec![1.0, 1.0, 1.0]), &HybridOptions::default())
            .unwrap();
        let csv = sol.trace.to_csv();
        assert!(csv.starts_with("k,alpha,gcv,train_loss,test_loss\n1,"));
    }
}
