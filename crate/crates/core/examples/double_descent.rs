//! Width sweep with the minimum-norm fit and with the hybrid method; writes
//! CSV and an SVG chart under the output directory.
//!
//! ```text
//! cargo run --release --example double_descent [out_dir]
//! ```

use std::path::PathBuf;

use hybrid_rfm::data::{synth_dataset, SynthSpec};
use hybrid_rfm::experiments::{double_descent_sweep, svg_loglog, Problem, Regularizer, Series, SweepConfig};

fn main() -> hybrid_rfm::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("double_descent"));
    std::fs::create_dir_all(&out).map_err(|e| hybrid_rfm::Error::io(&out, e))?;
    let p = synth_dataset(&SynthSpec::default())?;
    let problem = Problem::new(p.train, p.test)?;

    let mut series = Vec::new();
    for reg in [Regularizer::None, Regularizer::Hybrid] {
        let res = double_descent_sweep(
            &SweepConfig {
                regularizer: reg,
                ..SweepConfig::default()
            },
            &problem,
        )?;
        println!("{}:", res.label);
        for a in &res.aggregates {
            println!(
                "  m = {:>5}  test {:>9.4} +- {:<8.4} train {:.2e}  ||W|| {:.1}",
                a.m, a.mean.test_loss, a.std.test_loss, a.mean.train_loss, a.mean.solution_norm
            );
        }
        let path = out.join(format!("{}.csv", res.label));
        std::fs::write(&path, res.records_csv()).map_err(|e| hybrid_rfm::Error::io(&path, e))?;
        series.push(Series {
            name: res.label.clone(),
            points: res.mean_test_losses().into_iter().map(|(m, l)| (m as f64, l)).collect(),
        });
    }
    let svg = out.join("double_descent.svg");
    std::fs::write(&svg, svg_loglog("Test loss vs width", "m", "test loss", &series))
        .map_err(|e| hybrid_rfm::Error::io(&svg, e))?;
    println!("wrote {}", out.display());
    Ok(())
}
