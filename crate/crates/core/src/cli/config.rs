//! Flat run configuration shared by flags and config files.
//!
//! Every flag `--some-key` has the config-file key `some_key`. Values from
//! the command line override the file; the environment variable
//! [`DATA_ROOT_ENV`] sits between the two for `data_root`.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::SynthSpec;
use crate::error::{Error, Result};
use crate::experiments::Regularizer;
use crate::hybrid::{AlphaSearch, HybridOptions};

pub const DATA_ROOT_ENV: &str = "HYBRID_RFM_DATA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Synthetic,
    Mnist,
    Cifar10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RegKind {
    None,
    Gf,
    Wd,
    Tsvd,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    /// hold out part of the training set
    Validation,
    /// the test split itself (oracle; research only)
    Test,
}

/// Every setting is optional so flags and file can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Flat TOML file with the same keys as the flags
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// Worker threads (default: available cores)
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetKind>,

    /// Directory holding the MNIST or CIFAR-10 files
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_root: Option<PathBuf>,

    /// Training sample count
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,

    /// Test sample count
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_test: Option<usize>,

    /// Synthetic input dimension
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_features: Option<usize>,

    /// Synthetic class count
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,

    /// Synthetic label-noise rate
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,

    /// Seed for data generation and subsampling
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_seed: Option<u64>,

    /// Feature widths, comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<usize>>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,

    /// Seed from which every feature map is derived
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reg: Option<RegKind>,

    /// Gradient-flow stopping time
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,

    /// Weight decay
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,

    /// Truncation threshold on singular values
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,

    /// Hybrid iteration budget (default min(m, n, 1024))
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,

    /// Hybrid GCV flatness stopping tolerance (0 disables)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gcv_stop_tol: Option<f64>,

    /// Disable reorthogonalization in the bidiagonalization
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_reorth: Option<bool>,

    /// Record per-iteration hybrid test losses
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub track_iterations: Option<bool>,

    /// Allow tuning on test data. Research only: results are labeled oracle.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<bool>,

    /// Split scored by `tune`
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_split: Option<EvalSplit>,

    /// Fraction of training rows held out when `eval_split = validation`
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_fraction: Option<f64>,

    /// Tuner grid size
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,

    /// Tuner refinement evaluations
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine_evals: Option<usize>,

    /// Class column used by `picard`
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub picard_class: Option<usize>,

    /// Recorded in manifests; must match the subcommand when present
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    /// Recorded in manifests
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
}

macro_rules! layer {
    ($top:expr, $base:expr; $($field:ident),* $(,)?) => {
        RunConfig { $($field: $top.$field.or($base.$field),)* }
    };
}

impl RunConfig {
    /// `self` wins over `base` field by field.
    pub fn over(self, base: RunConfig) -> RunConfig {
        layer!(self, base;
            config, out, jobs, dataset, data_root, n, n_test, n_features, n_classes, noise,
            data_seed, m, trials, seed, reg, t, alpha, tau, max_iters, gcv_stop_tol, no_reorth,
            track_iterations, oracle, eval_split, validation_fraction, grid_points, refine_evals,
            picard_class, command, version,
        )
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let key = msg
                .strip_prefix("unknown field `")
                .and_then(|rest| rest.split('`').next())
                .map(str::to_string)
                .unwrap_or_else(|| origin.display().to_string());
            Error::Config { key, reason: e.to_string().trim().to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }
}

fn bad(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Dataset selection after defaults are applied.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SynthSpec),
    Mnist { root: PathBuf, n: usize, n_test: usize, seed: u64 },
    Cifar10 { root: PathBuf, n: usize, n_test: usize, seed: u64 },
}

/// Validated settings; building one performs every check that does not need
/// the data itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub data: DataSource,
    pub m_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub regularizer: Regularizer,
    pub hybrid: HybridOptions,
    pub track_iterations: bool,
    pub oracle: bool,
    pub eval_split: EvalSplit,
    pub validation_fraction: f64,
    pub grid_points: usize,
    pub refine_evals: usize,
    pub picard_class: usize,
    /// merged configuration with defaults filled in, for the manifest
    pub resolved: RunConfig,
}

fn positive(key: &str, v: usize) -> Result<usize> {
    if v == 0 {
        Err(bad(key, "must be at least 1"))
    } else {
        Ok(v)
    }
}

fn nonneg(key: &str, v: f64) -> Result<f64> {
    if !(v >= 0.0) || !v.is_finite() {
        Err(bad(key, format!("must be finite and >= 0, got {v}")))
    } else {
        Ok(v)
    }
}

impl Settings {
    pub fn resolve(cfg: RunConfig) -> Result<Settings> {
        let mut r = cfg;
        let dataset = *r.dataset.get_or_insert(DatasetKind::Synthetic);
        let synth = SynthSpec::default();
        let n = positive("n", *r.n.get_or_insert(synth.n))?;
        let n_test = positive("n_test", *r.n_test.get_or_insert(synth.n_test))?;
        let data_seed = *r.data_seed.get_or_insert(synth.seed);

        let data = match dataset {
            DatasetKind::Synthetic => {
                let n_features = positive("n_features", *r.n_features.get_or_insert(synth.n_features))?;
                let n_classes = positive("n_classes", *r.n_classes.get_or_insert(synth.n_classes))?;
                let noise = *r.noise.get_or_insert(synth.noise);
                if !(0.0..=1.0).contains(&noise) {
                    return Err(bad("noise", format!("must lie in [0, 1], got {noise}")));
                }
                DataSource::Synthetic(SynthSpec {
                    n,
                    n_test,
                    n_features,
                    n_classes,
                    noise,
                    seed: data_seed,
                })
            }
            kind => {
                for key in ["n_features", "n_classes", "noise"] {
                    let set = match key {
                        "n_features" => r.n_features.is_some(),
                        "n_classes" => r.n_classes.is_some(),
                        _ => r.noise.is_some(),
                    };
                    if set {
                        return Err(bad(key, "only applies to the synthetic dataset"));
                    }
                }
                let root = r
                    .data_root
                    .clone()
                    .ok_or_else(|| bad("data_root", format!("required for this dataset (or set {DATA_ROOT_ENV})")))?;
                if kind == DatasetKind::Mnist {
                    DataSource::Mnist { root, n, n_test, seed: data_seed }
                } else {
                    DataSource::Cifar10 { root, n, n_test, seed: data_seed }
                }
            }
        };

        let m_list = r.m.get_or_insert_with(|| vec![64, 128, 256, 512, 1024]).clone();
        if m_list.is_empty() {
            return Err(bad("m", "needs at least one width"));
        }
        if let Some(m) = m_list.iter().find(|&&m| m < 2) {
            return Err(bad("m", format!("widths must be >= 2, got {m}")));
        }
        let trials = positive("trials", *r.trials.get_or_insert(5))?;
        let seed = *r.seed.get_or_insert(0);

        let reg = *r.reg.get_or_insert(RegKind::None);
        let need = |key: &str, v: Option<f64>| -> Result<f64> {
            nonneg(key, v.ok_or_else(|| bad(key, format!("required by reg = {reg:?}").to_lowercase()))?)
        };
        let tuning = r.command.as_deref() == Some("tune");
        let hyper = |key: &str, v: Option<f64>| match (tuning, v) {
            (true, None) => Ok(0.0),
            _ => need(key, v),
        };
        let regularizer = match reg {
            RegKind::None => Regularizer::None,
            RegKind::Gf => Regularizer::GradientFlow { t: hyper("t", r.t)? },
            RegKind::Wd => Regularizer::WeightDecay { alpha: hyper("alpha", r.alpha)? },
            RegKind::Tsvd => Regularizer::Tsvd { tau: need("tau", r.tau)? },
            RegKind::Hybrid => Regularizer::Hybrid,
        };
        if let Some(v) = r.max_iters {
            positive("max_iters", v)?;
        }
        let gcv_stop_tol = nonneg("gcv_stop_tol", *r.gcv_stop_tol.get_or_insert(0.0))?;
        let hybrid = HybridOptions {
            max_iters: r.max_iters,
            gcv_stop_tol,
            alpha_search: AlphaSearch::default(),
            reorthogonalize: !*r.no_reorth.get_or_insert(false),
            fixed_alpha: None,
        };
        let track_iterations = *r.track_iterations.get_or_insert(false);
        let oracle = *r.oracle.get_or_insert(false);
        let eval_split = *r.eval_split.get_or_insert(EvalSplit::Validation);
        let validation_fraction = *r.validation_fraction.get_or_insert(0.2);
        if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
            return Err(bad("validation_fraction", format!("must lie in (0, 1), got {validation_fraction}")));
        }
        let grid_points = *r.grid_points.get_or_insert(crate::tuner::DEFAULT_GRID_POINTS);
        if grid_points < 2 {
            return Err(bad("grid_points", "must be at least 2"));
        }
        let refine_evals = *r.refine_evals.get_or_insert(crate::tuner::DEFAULT_REFINE_EVALS);
        let picard_class = *r.picard_class.get_or_insert(0);
        if let DataSource::Synthetic(s) = &data {
            if picard_class >= s.n_classes {
                return Err(bad("picard_class", format!("must be < n_classes = {}", s.n_classes)));
            }
        } else if picard_class >= 10 {
            return Err(bad("picard_class", "must be < 10"));
        }
        if let Some(j) = r.jobs {
            positive("jobs", j)?;
        }
        r.config = None;
        r.out = None;
        r.jobs = None;
        Ok(Settings {
            data,
            m_list,
            trials,
            seed,
            regularizer,
            hybrid,
            track_iterations,
            oracle,
            eval_split,
            validation_fraction,
            grid_points,
            refine_evals,
            picard_class,
            resolved: r,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_toml(text, Path::new("run.toml"))
    }

    #[test]
    fn unknown_key_is_named() {
        match parse("n = 10\nwidth = 3\n") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "width"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flags_override_file() {
        let file = parse("n = 10\ntrials = 2\nreg = \"wd\"\nalpha = 0.5\n").unwrap();
        let flags = RunConfig {
            n: Some(20),
            ..RunConfig::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.n, Some(20));
        assert_eq!(merged.trials, Some(2));
        let s = Settings::resolve(merged).unwrap();
        assert_eq!(s.regularizer, Regularizer::WeightDecay { alpha: 0.5 });
    }

    #[test]
    fn missing_hyperparameter_names_key() {
        let cfg = RunConfig {
            reg: Some(RegKind::Gf),
            ..RunConfig::default()
        };
        match Settings::resolve(cfg) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "t"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn image_data_needs_root() {
        let cfg = RunConfig {
            dataset: Some(DatasetKind::Mnist),
            ..RunConfig::default()
        };
        assert!(matches!(Settings::resolve(cfg.clone()), Err(Error::Config { key, .. }) if key == "data_root"));
        let env = RunConfig {
            data_root: Some(PathBuf::from("/data")),
            ..RunConfig::default()
        };
        let s = Settings::resolve(cfg.over(env)).unwrap();
        assert!(matches!(s.data, DataSource::Mnist { ref root, .. } if root == Path::new("/data")));
    }

    #[test]
    fn resolved_round_trips_through_toml() {
        let s = Settings::resolve(RunConfig::default()).unwrap();
        let text = toml::to_string(&s.resolved).unwrap();
        let back = Settings::resolve(parse(&text).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn widths_validated() {
        let cfg = RunConfig {
            m: Some(vec![1]),
            ..RunConfig::default()
        };
        assert!(matches!(Settings::resolve(cfg), Err(Error::Config { key, .. }) if key == "m"));
    }
}
