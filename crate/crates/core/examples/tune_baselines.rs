//! Weight decay and gradient-flow stopping time tuned on a held-out slice
//! of the training set, next to the hybrid method that needs no tuning.
//!
//! ```text
//! cargo run --release --example tune_baselines [m]
//! ```

use hybrid_rfm::data::{synth_dataset, SynthSpec};
use hybrid_rfm::experiments::{evaluate_features, loss};
use hybrid_rfm::hybrid::{hybrid_solve_multi, HybridOptions};
use hybrid_rfm::numerics::{svd, DEFAULT_RANK_TOL};
use hybrid_rfm::rfm::build_rfm;
use hybrid_rfm::spectral::{filtered_solution_multi, Filter, FilterSpec};
use hybrid_rfm::tuner::{tune_stopping_time, tune_weight_decay, TuneOptions, ALPHA_RANGE, TIME_RANGE};
use hybrid_rfm::Matrix;

fn main() -> hybrid_rfm::Result<()> {
    let p = synth_dataset(&SynthSpec::default())?;
    let n = p.train.len();
    let held = n / 5;
    let fit = p.train.select(&(0..n - held).collect::<Vec<_>>(), "fit")?;
    let val = p.train.select(&(n - held..n).collect::<Vec<_>>(), "validation")?;
    let m: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(fit.len());

    let rfm = build_rfm(fit.n_features(), m, 11)?;
    let z = rfm.featurize(&fit.y, "fit")?.z;
    let z_val = rfm.featurize(&val.y, "validation")?.z;
    let z_test = rfm.featurize(&p.test.y, "test")?.z;
    let s = svd(&z, DEFAULT_RANK_TOL)?;
    let opts = TuneOptions::default();
    let on_val = |w: &Matrix| loss(&z_val, w, &val.c);

    let wd = tune_weight_decay(&s, &fit.c, on_val, ALPHA_RANGE, &opts)?;
    let gf = tune_stopping_time(&s, &fit.c, on_val, TIME_RANGE, &opts)?;
    println!("m = {m}, fit rows {}, validation rows {held}", fit.len());
    for (name, filter) in [
        ("weight decay", Filter::WeightDecay(wd.best_hyperparameter)),
        ("gradient flow", Filter::GradientFlow(gf.best_hyperparameter)),
    ] {
        let w = filtered_solution_multi(&s, &fit.c, &FilterSpec::for_svd(filter, &s)?)?;
        let mt = evaluate_features(&z, &z_test, &w, &fit, &p.test)?;
        println!("{name:<14} {filter:?}: test loss {:.4}, accuracy {:.3}", mt.test_loss, mt.test_accuracy);
    }
    let hy = hybrid_solve_multi(&z, &fit.c, &HybridOptions::default())?;
    let mt = evaluate_features(&z, &z_test, &hy.w, &fit, &p.test)?;
    println!("{:<14} GCV per column: test loss {:.4}, accuracy {:.3}", "hybrid", mt.test_loss, mt.test_accuracy);
    Ok(())
}
