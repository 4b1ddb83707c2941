use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::{config_hash, featurize, jobs, run_hybrid, Featurized};
use super::{check_widths, evaluate_features, loss, trial_error, Problem, SweepResult, TrialRecord};
use crate::error::{Error, Result};
use crate::hybrid::HybridOptions;
use crate::numerics::{svd, SvdTriple, DEFAULT_RANK_TOL};
use crate::spectral::{filtered_solution_multi, Filter, FilterSpec};
use crate::tuner::{tune_stopping_time, tune_weight_decay, TuneOptions, ALPHA_RANGE, DEFAULT_GRID_POINTS, DEFAULT_REFINE_EVALS, TIME_RANGE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub m_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub hybrid: HybridOptions,
    pub grid_points: usize,
    pub refine_evals: usize,
    pub alpha_range: (f64, f64),
    pub time_range: (f64, f64),
    /// Must be set: the baselines are tuned on the test split.
    pub oracle: bool,
    pub track_iterations: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            m_list: vec![64, 128, 256, 512, 1024],
            trials: 5,
            seed: 0,
            hybrid: HybridOptions::default(),
            grid_points: DEFAULT_GRID_POINTS,
            refine_evals: DEFAULT_REFINE_EVALS,
            alpha_range: ALPHA_RANGE,
            time_range: TIME_RANGE,
            oracle: false,
            track_iterations: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// test-loss tuned stopping time
    pub gradient_flow: SweepResult,
    /// test-loss tuned weight decay
    pub weight_decay: SweepResult,
    pub hybrid: SweepResult,
}

impl Comparison {
    pub fn results(&self) -> [&SweepResult; 3] {
        [&self.gradient_flow, &self.weight_decay, &self.hybrid]
    }
}

struct JobOut {
    gf: TrialRecord,
    wd: TrialRecord,
    hybrid: TrialRecord,
}

fn oracle_record(
    f: &Featurized,
    s: &SvdTriple,
    problem: &Problem,
    filter: fn(f64) -> Filter,
    best: f64,
    (m, trial): (usize, usize),
) -> Result<TrialRecord> {
    let spec = FilterSpec::for_svd(filter(best), s)?;
    let w = filtered_solution_multi(s, &problem.train.c, &spec)?;
    Ok(TrialRecord {
        m,
        trial,
        seed: f.seed,
        metrics: evaluate_features(&f.z, &f.z_test, &w, &problem.train, &problem.test)?,
        hyperparameter: Some(best),
        test_curve: None,
    })
}

fn run_one(cfg: &CompareConfig, problem: &Problem, m: usize, trial: usize) -> Result<JobOut> {
    let f = featurize(problem, cfg.seed, m, trial)?;
    let s = svd(&f.z, DEFAULT_RANK_TOL)?;
    let opts = TuneOptions {
        grid_points: cfg.grid_points,
        refine_evals: cfg.refine_evals,
    };
    let test_loss = |w: &crate::Matrix| loss(&f.z_test, w, &problem.test.c);
    let c = &problem.train.c;
    let t_best = tune_stopping_time(&s, c, test_loss, cfg.time_range, &opts)?.best_hyperparameter;
    let a_best = tune_weight_decay(&s, c, test_loss, cfg.alpha_range, &opts)?.best_hyperparameter;
    let gf = oracle_record(&f, &s, problem, Filter::GradientFlow, t_best, (m, trial))?;
    let wd = oracle_record(&f, &s, problem, Filter::WeightDecay, a_best, (m, trial))?;

    let (w, curve) = run_hybrid(&f, problem, &cfg.hybrid, cfg.track_iterations)?;
    let hybrid = TrialRecord {
        m,
        trial,
        seed: f.seed,
        metrics: evaluate_features(&f.z, &f.z_test, &w, &problem.train, &problem.test)?,
        hyperparameter: None,
        test_curve: curve,
    };
    Ok(JobOut { gf, wd, hybrid })
}

/// Oracle-tuned gradient flow and weight decay against the hybrid method on
/// the same feature models.
pub fn compare_regularizers(cfg: &CompareConfig, problem: &Problem) -> Result<Comparison> {
    if !cfg.oracle {
        return Err(Error::input(
            "comparison tunes the baselines on test data; set the oracle flag to allow it",
        ));
    }
    check_widths(&cfg.m_list, cfg.trials)?;
    let outs = jobs(&cfg.m_list, cfg.trials)
        .into_par_iter()
        .map(|(m, t)| run_one(cfg, problem, m, t).map_err(trial_error(m, t)))
        .collect::<Result<Vec<_>>>()?;
    let mut gf = Vec::with_capacity(outs.len());
    let mut wd = Vec::with_capacity(outs.len());
    let mut hy = Vec::with_capacity(outs.len());
    for o in outs {
        gf.push(o.gf);
        wd.push(o.wd);
        hy.push(o.hybrid);
    }
    let build = |label: &str, oracle: bool, records| -> Result<SweepResult> {
        let hash = config_hash(label, cfg, problem)?;
        Ok(SweepResult::assemble(label, oracle, hash, &cfg.m_list, cfg.trials, records))
    };
    Ok(Comparison {
        gradient_flow: build("gf-oracle", true, gf)?,
        weight_decay: build("wd-oracle", true, wd)?,
        hybrid: build("hybrid", false, hy)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dataset, SynthSpec};

    fn problem() -> Problem {
        let p = synth_dataset(&SynthSpec {
            n: 24,
            n_test: 16,
            n_features: 4,
            n_classes: 2,
            noise: 0.1,
            seed: 3,
        })
        .unwrap();
        Problem::new(p.train, p.test).unwrap()
    }

    fn small() -> CompareConfig {
        CompareConfig {
            m_list: vec![8, 24],
            trials: 1,
            grid_points: 12,
            refine_evals: 8,
            oracle: true,
            ..CompareConfig::default()
        }
    }

    #[test]
    fn refused_without_oracle() {
        let cfg = CompareConfig {
            oracle: false,
            ..small()
        };
        assert!(matches!(compare_regularizers(&cfg, &problem()), Err(Error::Input(_))));
    }

    #[test]
    fn labels_and_tuned_values() {
        let r = compare_regularizers(&small(), &problem()).unwrap();
        assert!(r.gradient_flow.oracle && r.weight_decay.oracle && !r.hybrid.oracle);
        assert_eq!(r.weight_decay.label, "wd-oracle");
        for rec in &r.weight_decay.records {
            let a = rec.hyperparameter.unwrap();
            assert!((ALPHA_RANGE.0..=ALPHA_RANGE.1).contains(&a));
        }
        // same feature models for all three methods
        for (a, b) in r.gradient_flow.records.iter().zip(&r.hybrid.records) {
            assert_eq!(a.seed, b.seed);
        }
    }
}
