//! Golden-section search on a closed interval.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy)]
pub struct ScalarOptions {
    /// Stop once the bracket is narrower than this. `None` means
    /// `1e-8 * (hi - lo)`.
    pub tol: Option<f64>,
    /// Hard cap on objective evaluations, endpoints included.
    pub max_evals: usize,
}

impl Default for ScalarOptions {
    fn default() -> Self {
        Self {
            tol: None,
            max_evals: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub x: f64,
    pub fx: f64,
    pub evals: usize,
}

/// Minimizes `f` on `[lo, hi]`, assuming it is unimodal there.
pub fn minimize_scalar<F>(f: F, lo: f64, hi: f64, tol: Option<f64>) -> Result<ScalarMinimum>
where
    F: FnMut(f64) -> f64,
{
    minimize_scalar_with(
        f,
        lo,
        hi,
        &ScalarOptions {
            tol,
            ..ScalarOptions::default()
        },
    )
}

/// Golden-section search. The endpoints are evaluated too, so a monotone
/// objective returns its boundary minimum exactly. `f` is never evaluated
/// outside `[lo, hi]`.
pub fn minimize_scalar_with<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: &ScalarOptions,
) -> Result<ScalarMinimum>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::input(format!("invalid interval [{lo}, {hi}]")));
    }
    let tol = opts.tol.unwrap_or(1e-8 * (hi - lo));
    if !(tol > 0.0) {
        return Err(Error::input(format!("tolerance must be positive, got {tol}")));
    }
    if opts.max_evals < 4 {
        return Err(Error::input("golden section needs at least 4 evaluations"));
    }

    let mut evals = 0usize;
    let mut eval = |x: f64| -> Result<f64> {
        evals += 1;
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::numerical(format!("objective returned {v} at x = {x}")))
        }
    };

    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    let mut best = if f_hi < f_lo { (hi, f_hi) } else { (lo, f_lo) };

    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    let mut used = 4;

    while b - a > tol && used < opts.max_evals {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2)?;
        }
        used += 1;
    }

    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(ScalarMinimum {
        x: best.0,
        fx: best.1,
        evals: used,
    })
}
