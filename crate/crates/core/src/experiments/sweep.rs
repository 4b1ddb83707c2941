use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{check_widths, evaluate_features, trial_error, trial_seed, Metrics, Problem, Regularizer};
use crate::error::Result;
use crate::hybrid::{hybrid_solve_multi_monitored, HybridOptions, MultiSolution};
use crate::numerics::{svd, Matrix, DEFAULT_RANK_TOL};
use crate::rfm::build_rfm;
use crate::spectral::{filtered_solution_multi, Filter, FilterSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub m_list: Vec<usize>,
    pub trials: usize,
    pub regularizer: Regularizer,
    pub seed: u64,
    pub hybrid: HybridOptions,
    /// Record the combined per-iteration test loss of hybrid runs.
    pub track_iterations: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            m_list: vec![64, 128, 256, 512, 1024],
            trials: 5,
            regularizer: Regularizer::None,
            seed: 0,
            hybrid: HybridOptions::default(),
            track_iterations: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub m: usize,
    pub trial: usize,
    /// seed of the feature map
    pub seed: u64,
    pub metrics: Metrics,
    /// tuned `t` or `α` for oracle baselines
    pub hyperparameter: Option<f64>,
    /// hybrid test loss summed over classes, one entry per iteration
    pub test_curve: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub m: usize,
    pub trials: usize,
    pub mean: Metrics,
    /// sample standard deviation; zero for a single trial
    pub std: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub label: String,
    /// hyperparameters were tuned on the test split
    pub oracle: bool,
    pub config_hash: String,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepResult {
    pub(crate) fn assemble(
        label: impl Into<String>,
        oracle: bool,
        config_hash: String,
        m_list: &[usize],
        trials: usize,
        records: Vec<TrialRecord>,
    ) -> Self {
        let aggregates = records
            .chunks(trials)
            .zip(m_list)
            .map(|(chunk, &m)| aggregate(m, chunk))
            .collect();
        Self {
            label: label.into(),
            oracle,
            config_hash,
            records,
            aggregates,
        }
    }

    pub fn aggregate_for(&self, m: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.m == m)
    }

    pub fn mean_test_losses(&self) -> Vec<(usize, f64)> {
        self.aggregates.iter().map(|a| (a.m, a.mean.test_loss)).collect()
    }

    pub fn records_csv(&self) -> String {
        let mut out = String::from("m,trial,train_loss,test_loss,gap,train_acc,test_acc,norm_w\n");
        for r in &self.records {
            let x = &r.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.m,
                r.trial,
                x.train_loss,
                x.test_loss,
                x.generalization_gap,
                x.train_accuracy,
                x.test_accuracy,
                x.solution_norm
            );
        }
        out
    }

    pub fn aggregates_csv(&self) -> String {
        let mut out = String::from("m,trials");
        for stat in ["mean", "std"] {
            for col in ["train_loss", "test_loss", "gap", "train_acc", "test_acc", "norm_w"] {
                let _ = write!(out, ",{stat}_{col}");
            }
        }
        out.push('\n');
        for a in &self.aggregates {
            let _ = write!(out, "{},{}", a.m, a.trials);
            for x in [&a.mean, &a.std] {
                let _ = write!(
                    out,
                    ",{},{},{},{},{},{}",
                    x.train_loss,
                    x.test_loss,
                    x.generalization_gap,
                    x.train_accuracy,
                    x.test_accuracy,
                    x.solution_norm
                );
            }
            out.push('\n');
        }
        out
    }

    /// Per-iteration hybrid test losses, empty body when none were tracked.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("m,trial,k,test_loss\n");
        for r in &self.records {
            for (k, v) in r.test_curve.iter().flatten().enumerate() {
                let _ = writeln!(out, "{},{},{},{}", r.m, r.trial, k + 1, v);
            }
        }
        out
    }

    /// JSON summary: label, oracle flag, config hash, seeds and aggregates.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Seed {
            m: usize,
            trial: usize,
            seed: u64,
            hyperparameter: Option<f64>,
        }
        #[derive(Serialize)]
        struct Summary<'a> {
            label: &'a str,
            oracle: bool,
            config_hash: &'a str,
            seeds: Vec<Seed>,
            aggregates: &'a [Aggregate],
        }
        let summary = Summary {
            label: &self.label,
            oracle: self.oracle,
            config_hash: &self.config_hash,
            seeds: self
                .records
                .iter()
                .map(|r| Seed {
                    m: r.m,
                    trial: r.trial,
                    seed: r.seed,
                    hyperparameter: r.hyperparameter,
                })
                .collect(),
            aggregates: &self.aggregates,
        };
        Ok(serde_json::to_string_pretty(&summary)?)
    }
}

fn aggregate(m: usize, chunk: &[TrialRecord]) -> Aggregate {
    let fields = |x: &Metrics| {
        [
            x.train_loss,
            x.test_loss,
            x.generalization_gap,
            x.train_accuracy,
            x.test_accuracy,
            x.solution_norm,
        ]
    };
    let k = chunk.len() as f64;
    let mut mean = [0.0; 6];
    for r in chunk {
        for (acc, v) in mean.iter_mut().zip(fields(&r.metrics)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= k);
    let mut var = [0.0; 6];
    if chunk.len() > 1 {
        for r in chunk {
            for ((acc, v), mu) in var.iter_mut().zip(fields(&r.metrics)).zip(&mean) {
                *acc += (v - mu).powi(2);
            }
        }
        var.iter_mut().for_each(|v| *v = (*v / (k - 1.0)).sqrt());
    }
    let build = |a: [f64; 6]| Metrics {
        train_loss: a[0],
        test_loss: a[1],
        generalization_gap: a[2],
        train_accuracy: a[3],
        test_accuracy: a[4],
        solution_norm: a[5],
    };
    Aggregate {
        m,
        trials: chunk.len(),
        mean: build(mean),
        std: build(var),
    }
}

/// SHA-256 over the JSON of `config` and the identity of the problem.
pub(crate) fn config_hash<T: Serialize>(label: &str, config: &T, problem: &Problem) -> Result<String> {
    #[derive(Serialize)]
    struct Provenance<'a, T> {
        label: &'a str,
        config: &'a T,
        train: (&'a str, usize, usize),
        test: (&'a str, usize, usize),
    }
    let doc = serde_json::to_vec(&Provenance {
        label,
        config,
        train: (&problem.train.name, problem.train.len(), problem.train.n_features()),
        test: (&problem.test.name, problem.test.len(), problem.test.n_features()),
    })?;
    Ok(hex::encode(Sha256::digest(&doc)))
}

pub(crate) struct Featurized {
    pub seed: u64,
    pub z: Matrix,
    pub z_test: Matrix,
}

pub(crate) fn featurize(problem: &Problem, base_seed: u64, m: usize, trial: usize) -> Result<Featurized> {
    let seed = trial_seed(base_seed, m, trial);
    let rfm = build_rfm(problem.train.n_features(), m, seed)?;
    Ok(Featurized {
        seed,
        z: rfm.featurize(&problem.train.y, &problem.train.name)?.z,
        z_test: rfm.featurize(&problem.test.y, &problem.test.name)?.z,
    })
}

pub(crate) fn jobs(m_list: &[usize], trials: usize) -> Vec<(usize, usize)> {
    m_list
        .iter()
        .flat_map(|&m| (0..trials).map(move |t| (m, t)))
        .collect()
}

/// Hybrid solve; with `track` the summed per-class test loss is recorded at
/// every iteration.
pub(crate) fn run_hybrid(
    f: &Featurized,
    problem: &Problem,
    opts: &HybridOptions,
    track: bool,
) -> Result<(Matrix, Option<Vec<f64>>)> {
    let c = &problem.train.c;
    let ct = &problem.test.c;
    let monitor = track.then_some((&f.z_test, ct));
    let MultiSolution { w, traces, .. } = hybrid_solve_multi_monitored(&f.z, c, opts, monitor)?;
    if !track {
        return Ok((w, None));
    }
    let len = traces.iter().flatten().map(|t| t.iterations.len()).max().unwrap_or(0);
    let scale = 1.0 / (2.0 * ct.nrows() as f64);
    let mut curve = vec![0.0; len];
    for (j, trace) in traces.iter().enumerate() {
        match trace {
            Some(t) => {
                for (k, v) in curve.iter_mut().enumerate() {
                    let it = &t.iterations[k.min(t.iterations.len() - 1)];
                    *v += it.test_loss.unwrap_or(f64::NAN);
                }
            }
            None => {
                let zero_fit = ct.column(j).norm_squared() * scale;
                curve.iter_mut().for_each(|v| *v += zero_fit);
            }
        }
    }
    Ok((w, Some(curve)))
}

fn run_one(cfg: &SweepConfig, problem: &Problem, m: usize, trial: usize) -> Result<TrialRecord> {
    let f = featurize(problem, cfg.seed, m, trial)?;
    let (w, curve) = match cfg.regularizer {
        Regularizer::Hybrid => run_hybrid(&f, problem, &cfg.hybrid, cfg.track_iterations)?,
        reg => {
            let filter = match reg {
                Regularizer::None => Filter::None,
                Regularizer::GradientFlow { t } => Filter::GradientFlow(t),
                Regularizer::WeightDecay { alpha } => Filter::WeightDecay(alpha),
                Regularizer::Tsvd { tau } => Filter::Tsvd(tau),
                Regularizer::Hybrid => unreachable!(),
            };
            let s = svd(&f.z, DEFAULT_RANK_TOL)?;
            let spec = FilterSpec::for_svd(filter, &s)?;
            (filtered_solution_multi(&s, &problem.train.c, &spec)?, None)
        }
    };
    Ok(TrialRecord {
        m,
        trial,
        seed: f.seed,
        metrics: evaluate_features(&f.z, &f.z_test, &w, &problem.train, &problem.test)?,
        hyperparameter: None,
        test_curve: curve,
    })
}

/// Trains one feature model per `(m, trial)` with `cfg.regularizer` and
/// aggregates the metrics per width.
pub fn double_descent_sweep(cfg: &SweepConfig, problem: &Problem) -> Result<SweepResult> {
    check_widths(&cfg.m_list, cfg.trials)?;
    let label = cfg.regularizer.label();
    let hash = config_hash(label, cfg, problem)?;
    let records = jobs(&cfg.m_list, cfg.trials)
        .into_par_iter()
        .map(|(m, t)| run_one(cfg, problem, m, t).map_err(trial_error(m, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::assemble(label, false, hash, &cfg.m_list, cfg.trials, records))
}
