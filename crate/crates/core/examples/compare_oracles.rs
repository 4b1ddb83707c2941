//! Hybrid method against gradient flow and weight decay tuned directly on
//! the test split (oracle baselines).
//!
//! ```text
//! cargo run --release --example compare_oracles
//! ```

use hybrid_rfm::data::{synth_dataset, SynthSpec};
use hybrid_rfm::experiments::{compare_regularizers, CompareConfig, Problem};

fn main() -> hybrid_rfm::Result<()> {
    let p = synth_dataset(&SynthSpec::default())?;
    let problem = Problem::new(p.train, p.test)?;
    let cmp = compare_regularizers(
        &CompareConfig {
            m_list: vec![64, 256, 1024],
            trials: 3,
            oracle: true,
            ..CompareConfig::default()
        },
        &problem,
    )?;
    let [gf, wd, hy] = cmp.results();
    println!("{:>6} {:>10} {:>10} {:>10}", "m", gf.label, wd.label, hy.label);
    for ((g, w), h) in gf.aggregates.iter().zip(&wd.aggregates).zip(&hy.aggregates) {
        println!("{:>6} {:>10.4} {:>10.4} {:>10.4}", g.m, g.mean.test_loss, w.mean.test_loss, h.mean.test_loss);
    }
    Ok(())
}
