//! Experiment drivers: train/test metrics, the double-descent width sweep,
//! Picard diagnostics and the oracle-baseline comparison.
//!
//! Every `(m, trial)` job redraws its feature map from a seed derived from
//! the configuration seed, so jobs are independent and run in parallel
//! while results stay bit-for-bit reproducible.

mod compare;
mod picard;
mod report;
mod sweep;

pub use compare::{compare_regularizers, CompareConfig, Comparison};
pub use picard::{picard_run, PicardConfig, PicardReport, PicardTrial};
pub use report::{svg_loglog, Series};
pub use sweep::{double_descent_sweep, Aggregate, SweepConfig, SweepResult, TrialRecord};

use serde::{Deserialize, Serialize};

use crate::data::{argmax_rows, Dataset};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::rfm::RfmParams;

/// Regularizer applied to the read-out of each feature model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    /// Minimum-norm least squares.
    None,
    GradientFlow { t: f64 },
    WeightDecay { alpha: f64 },
    Tsvd { tau: f64 },
    /// LSQR with GCV-selected weight decay.
    Hybrid,
}

impl Regularizer {
    pub fn label(&self) -> &'static str {
        match self {
            Regularizer::None => "none",
            Regularizer::GradientFlow { .. } => "gf",
            Regularizer::WeightDecay { .. } => "wd",
            Regularizer::Tsvd { .. } => "tsvd",
            Regularizer::Hybrid => "hybrid",
        }
    }
}

/// Training and test split fed to every job of an experiment.
#[derive(Debug, Clone)]
pub struct Problem {
    pub train: Dataset,
    pub test: Dataset,
}

impl Problem {
    pub fn new(train: Dataset, test: Dataset) -> Result<Self> {
        if train.n_features() != test.n_features() || train.n_classes != test.n_classes {
            return Err(Error::input(format!(
                "train ({} features, {} classes) and test ({} features, {} classes) disagree",
                train.n_features(),
                train.n_classes,
                test.n_features(),
                test.n_classes
            )));
        }
        if train.is_empty() || test.is_empty() {
            return Err(Error::input("train and test splits must be non-empty"));
        }
        Ok(Self { train, test })
    }

    pub fn n(&self) -> usize {
        self.train.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_loss: f64,
    pub test_loss: f64,
    pub generalization_gap: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// `‖W‖_F`
    pub solution_norm: f64,
}

/// `(1/(2n)) ‖Z W − C‖_F²`
pub fn loss(z: &Matrix, w: &Matrix, c: &Matrix) -> Result<f64> {
    if z.ncols() != w.nrows() || z.nrows() != c.nrows() || w.ncols() != c.ncols() {
        return Err(Error::input(format!(
            "loss shapes: Z {}x{}, W {}x{}, C {}x{}",
            z.nrows(),
            z.ncols(),
            w.nrows(),
            w.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    Ok((z * w - c).norm_squared() / (2.0 * z.nrows() as f64))
}

fn accuracy(z: &Matrix, w: &Matrix, labels: &[usize]) -> f64 {
    let pred = argmax_rows(&(z * w));
    let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / labels.len() as f64
}

/// Metrics of read-out `W` on already featurized splits.
pub fn evaluate_features(
    z_train: &Matrix,
    z_test: &Matrix,
    w: &Matrix,
    train: &Dataset,
    test: &Dataset,
) -> Result<Metrics> {
    let train_loss = loss(z_train, w, &train.c)?;
    let test_loss = loss(z_test, w, &test.c)?;
    Ok(Metrics {
        train_loss,
        test_loss,
        generalization_gap: test_loss - train_loss,
        train_accuracy: accuracy(z_train, w, &train.labels),
        test_accuracy: accuracy(z_test, w, &test.labels),
        solution_norm: w.norm(),
    })
}

pub fn evaluate(params: &RfmParams, w: &Matrix, train: &Dataset, test: &Dataset) -> Result<Metrics> {
    let z_train = params.featurize(&train.y, &train.name)?.z;
    let z_test = params.featurize(&test.y, &test.name)?.z;
    evaluate_features(&z_train, &z_test, w, train, test)
}

/// Seed of the feature map for job `(m, trial)`.
pub fn trial_seed(seed: u64, m: usize, trial: usize) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ m as u64);
    splitmix64(h ^ trial as u64)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn check_widths(m_list: &[usize], trials: usize) -> Result<()> {
    if m_list.is_empty() {
        return Err(Error::input("m_list is empty"));
    }
    if let Some(m) = m_list.iter().find(|&&m| m < 2) {
        return Err(Error::input(format!("every width must be >= 2, got {m}")));
    }
    if trials == 0 {
        return Err(Error::input("trials must be at least 1"));
    }
    Ok(())
}

pub(crate) fn trial_error(m: usize, trial: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Trial {
        m,
        trial,
        source: Box::new(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dataset, SynthSpec};
    use crate::rfm::build_rfm;

    fn problem() -> Problem {
        let p = synth_dataset(&SynthSpec {
            n: 30,
            n_test: 20,
            n_features: 5,
            n_classes: 3,
            noise: 0.1,
            seed: 2,
        })
        .unwrap();
        Problem::new(p.train, p.test).unwrap()
    }

    #[test]
    fn zero_model_loss() {
        let p = problem();
        let rfm = build_rfm(5, 8, 1).unwrap();
        let w = Matrix::zeros(8, 3);
        let got = evaluate(&rfm, &w, &p.train, &p.test).unwrap();
        let want = p.train.c.norm_squared() / (2.0 * p.train.len() as f64);
        assert_eq!(got.train_loss, want);
        assert_eq!(got.solution_norm, 0.0);
        assert_eq!(got.generalization_gap, got.test_loss - got.train_loss);
    }

    #[test]
    fn identical_splits_have_no_gap() {
        let p = problem();
        let rfm = build_rfm(5, 8, 1).unwrap();
        let w = Matrix::from_fn(8, 3, |i, j| (i as f64 - 2.0 * j as f64) * 0.1);
        let got = evaluate(&rfm, &w, &p.train, &p.train).unwrap();
        assert_eq!(got.generalization_gap, 0.0);
        assert!((0.0..=1.0).contains(&got.train_accuracy));
    }

    #[test]
    fn shape_mismatch_is_input_error() {
        let p = problem();
        let rfm = build_rfm(5, 8, 1).unwrap();
        let w = Matrix::zeros(7, 3);
        assert!(matches!(evaluate(&rfm, &w, &p.train, &p.test), Err(Error::Input(_))));
    }

    #[test]
    fn trial_seeds_differ() {
        let a = trial_seed(0, 64, 0);
        assert_eq!(a, trial_seed(0, 64, 0));
        assert_ne!(a, trial_seed(0, 64, 1));
        assert_ne!(a, trial_seed(0, 128, 0));
        assert_ne!(a, trial_seed(1, 64, 0));
    }

    #[test]
    fn width_checks() {
        assert!(check_widths(&[], 1).is_err());
        assert!(check_widths(&[1, 4], 1).is_err());
        assert!(check_widths(&[4], 0).is_err());
        assert!(check_widths(&[2, 4], 3).is_ok());
    }
}
