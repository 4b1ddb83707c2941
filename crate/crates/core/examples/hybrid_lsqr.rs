//! Hybrid LSQR at the interpolation threshold, one class column, with the
//! test loss watched per iteration.
//!
//! ```text
//! cargo run --release --example hybrid_lsqr [m]
//! ```

use hybrid_rfm::data::{synth_dataset, SynthSpec};
use hybrid_rfm::hybrid::{hybrid_solve, hybrid_solve_monitored, HybridOptions, TestMonitor};
use hybrid_rfm::rfm::build_rfm;

fn main() -> hybrid_rfm::Result<()> {
    let p = synth_dataset(&SynthSpec::default())?;
    let m: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(p.train.len());
    let rfm = build_rfm(p.train.n_features(), m, 3)?;
    let z = rfm.featurize(&p.train.y, "train")?.z;
    let z_test = rfm.featurize(&p.test.y, "test")?.z;
    let c = p.train.c.column(0).into_owned();
    let c_test = p.test.c.column(0).into_owned();

    let sol = hybrid_solve_monitored(
        &z,
        &c,
        &HybridOptions::default(),
        Some(TestMonitor {
            z_test: &z_test,
            c_test: &c_test,
        }),
    )?;
    println!("{:>5} {:>11} {:>11} {:>10} {:>10}", "k", "alpha", "gcv", "train", "test");
    let every = (sol.trace.iterations.len() / 16).max(1);
    for it in sol.trace.iterations.iter().step_by(every) {
        println!(
            "{:>5} {:>11.3e} {:>11.3e} {:>10.5} {:>10.5}",
            it.k,
            it.alpha,
            it.gcv,
            it.train_loss,
            it.test_loss.unwrap_or(f64::NAN)
        );
    }
    let last = sol.trace.last().unwrap();
    println!("stopped after {} iterations ({:?}), alpha = {:.3e}", last.k, sol.trace.stop_reason, last.alpha);

    let plain = hybrid_solve(
        &z,
        &c,
        &HybridOptions {
            fixed_alpha: Some(0.0),
            ..HybridOptions::default()
        },
    )?;
    let test = |w: &hybrid_rfm::Vector| (&z_test * w - &c_test).norm_squared() / (2.0 * c_test.len() as f64);
    println!("test loss: hybrid {:.4}, unregularized LSQR {:.4}", test(&sol.w), test(&plain.w));
    Ok(())
}
