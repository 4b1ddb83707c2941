//! Picard data below, at and above the interpolation threshold, averaged
//! over trials.
//!
//! ```text
//! cargo run --release --example picard_plot
//! ```

use hybrid_rfm::data::{synth_dataset, SynthSpec};
use hybrid_rfm::experiments::{picard_run, PicardConfig, Problem};

fn main() -> hybrid_rfm::Result<()> {
    let p = synth_dataset(&SynthSpec::default())?;
    let problem = Problem::new(p.train, p.test)?;
    let n = problem.n();
    let report = picard_run(
        &PicardConfig {
            m_list: vec![n / 2, n, 2 * n],
            ..PicardConfig::default()
        },
        &problem,
    )?;
    for (m, data) in &report.averaged {
        let r = data.rows.len();
        println!("m = {m} (rank {r}), tail/head ratio surge {:.2}", report.surge(*m).unwrap());
        for j in [0, r / 4, r / 2, 3 * r / 4, r - 1] {
            let row = &data.rows[j];
            println!("  j = {:>4}  sigma {:>10.3e}  |u'c| {:>9.3e}  ratio {:>10.3e}", j + 1, row.sigma, row.coef, row.ratio);
        }
    }
    Ok(())
}
