//! Oracle-style hyperparameter tuning for the spectral baselines.
//!
//! A 100-point log grid is scanned first; golden-section search on the log
//! axis then refines inside the two grid cells around the best point. The
//! evaluation closure decides what is being minimized (test loss for oracle
//! baselines, validation loss otherwise).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{minimize_scalar_with, Matrix, ScalarOptions, SvdTriple};
use crate::spectral::{filtered_solution_multi, Filter, FilterSpec};

pub const DEFAULT_GRID_POINTS: usize = 100;
pub const DEFAULT_REFINE_EVALS: usize = 60;

/// Default weight-decay search range.
pub const ALPHA_RANGE: (f64, f64) = (1e-8, 1e2);
/// Default gradient-flow stopping-time range.
pub const TIME_RANGE: (f64, f64) = (1e-2, 1e10);

/// Geometric grid from `lo` to `hi`, both endpoints exact.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) {
        return Err(Error::input(format!("log grid needs lo > 0, got {lo}")));
    }
    if !(hi > lo) || !hi.is_finite() {
        return Err(Error::input(format!("log grid needs hi > lo, got [{lo}, {hi}]")));
    }
    match points {
        0 => return Err(Error::input("log grid needs at least one point")),
        1 => return Ok(vec![lo]),
        _ => {}
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| (a + step * i as f64).exp()).collect();
    grid[0] = lo;
    grid[points - 1] = hi;
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneMethod {
    GridThenRefine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_hyperparameter: f64,
    pub best_loss: f64,
    pub grid_losses: Vec<(f64, f64)>,
    pub method: TuneMethod,
    pub evaluations: usize,
}

impl TuneResult {
    pub fn grid_csv(&self) -> String {
        let mut out = String::from("hyperparameter,loss\n");
        for (h, l) in &self.grid_losses {
            let _ = writeln!(out, "{h},{l}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneOptions {
    pub grid_points: usize,
    pub refine_evals: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            refine_evals: DEFAULT_REFINE_EVALS,
        }
    }
}

/// Minimizes `objective(h)` over `h ∈ [lo, hi]` on a log axis.
pub fn tune<F>(mut objective: F, lo: f64, hi: f64, opts: &TuneOptions) -> Result<TuneResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let grid = log_grid(lo, hi, opts.grid_points)?;
    let mut grid_losses = Vec::with_capacity(grid.len());
    for &h in &grid {
        let loss = objective(h)?;
        if !loss.is_finite() {
            return Err(Error::numerical(format!("objective is {loss} at grid point {h}")));
        }
        grid_losses.push((h, loss));
    }
    let (best_i, &(mut best_h, mut best_loss)) = grid_losses
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("grid is non-empty");
    let mut evaluations = grid.len();

    if grid.len() >= 2 && opts.refine_evals >= 4 {
        let a = grid[best_i.saturating_sub(1)].ln();
        let b = grid[(best_i + 1).min(grid.len() - 1)].ln();
        let mut failure = None;
        let refined = minimize_scalar_with(
            |lh| match objective(lh.exp()) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            a,
            b,
            &ScalarOptions {
                tol: Some(1e-8 * (b - a).abs().max(f64::MIN_POSITIVE)),
                max_evals: opts.refine_evals,
            },
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let refined = refined?;
        evaluations += refined.evals;
        if refined.fx < best_loss {
            best_loss = refined.fx;
            best_h = refined.x.exp();
        }
    }
    Ok(TuneResult {
        best_hyperparameter: best_h,
        best_loss,
        grid_losses,
        method: TuneMethod::GridThenRefine,
        evaluations,
    })
}

/// Tunes weight decay `α` on a precomputed SVD of `Z`; `eval_fn` scores the
/// `m × n_c` weights.
pub fn tune_weight_decay<E>(
    svd: &SvdTriple,
    c_train: &Matrix,
    eval_fn: E,
    range: (f64, f64),
    opts: &TuneOptions,
) -> Result<TuneResult>
where
    E: FnMut(&Matrix) -> Result<f64>,
{
    tune_filter(svd, c_train, eval_fn, Filter::WeightDecay, range, opts)
}

/// Tunes the gradient-flow stopping time `t` on a precomputed SVD of `Z`.
pub fn tune_stopping_time<E>(
    svd: &SvdTriple,
    c_train: &Matrix,
    eval_fn: E,
    range: (f64, f64),
    opts: &TuneOptions,
) -> Result<TuneResult>
where
    E: FnMut(&Matrix) -> Result<f64>,
{
    tune_filter(svd, c_train, eval_fn, Filter::GradientFlow, range, opts)
}

fn tune_filter<E>(
    svd: &SvdTriple,
    c_train: &Matrix,
    mut eval_fn: E,
    make: fn(f64) -> Filter,
    range: (f64, f64),
    opts: &TuneOptions,
) -> Result<TuneResult>
where
    E: FnMut(&Matrix) -> Result<f64>,
{
    tune(
        |h| {
            let spec = FilterSpec::for_svd(make(h), svd)?;
            let w = filtered_solution_multi(svd, c_train, &spec)?;
            eval_fn(&w)
        },
        range.0,
        range.1,
        opts,
    )
}
