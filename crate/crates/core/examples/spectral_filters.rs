//! Filter-factor solutions on one random feature model.
//!
//! ```text
//! cargo run --release --example spectral_filters
//! ```

use hybrid_rfm::data::{synth_dataset, SynthSpec};
use hybrid_rfm::experiments::{evaluate_features, Problem};
use hybrid_rfm::numerics::{svd, DEFAULT_RANK_TOL};
use hybrid_rfm::rfm::build_rfm;
use hybrid_rfm::spectral::{filtered_solution_multi, picard_data, Filter, FilterSpec};

fn main() -> hybrid_rfm::Result<()> {
    let p = synth_dataset(&SynthSpec::default())?;
    let problem = Problem::new(p.train, p.test)?;
    let m = problem.n();
    let rfm = build_rfm(problem.train.n_features(), m, 7)?;
    let z = rfm.featurize(&problem.train.y, "train")?.z;
    let z_test = rfm.featurize(&problem.test.y, "test")?.z;
    let s = svd(&z, DEFAULT_RANK_TOL)?;
    println!("Z is {}x{}, rank {}, sigma in [{:.3e}, {:.3e}]", z.nrows(), z.ncols(), s.rank(), s.s[s.rank() - 1], s.s[0]);

    let filters = [
        Filter::None,
        Filter::Tsvd(0.5),
        Filter::GradientFlow(1e5),
        Filter::WeightDecay(0.05),
    ];
    println!("{:<24} {:>10} {:>10} {:>9} {:>10}", "filter", "train", "test", "test acc", "||W||");
    for f in filters {
        let spec = FilterSpec::for_svd(f, &s)?;
        let w = filtered_solution_multi(&s, &problem.train.c, &spec)?;
        let mt = evaluate_features(&z, &z_test, &w, &problem.train, &problem.test)?;
        println!(
            "{:<24} {:>10.4} {:>10.4} {:>9.3} {:>10.2}",
            format!("{f:?}"),
            mt.train_loss,
            mt.test_loss,
            mt.test_accuracy,
            mt.solution_norm
        );
    }

    let c0 = problem.train.c.column(0).into_owned();
    let pic = picard_data(&s, &c0)?;
    let (head, tail) = pic.decile_medians().unwrap();
    println!("Picard ratio, first vs last decile median: {head:.3e} vs {tail:.3e}");
    Ok(())
}
