//! Command-line front end. Each subcommand writes a fixed set of files
//! under `--out` plus a `manifest.toml` that replays the run when passed
//! back as `--config`.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{DataSource, DatasetKind, EvalSplit, RegKind, RunConfig, Settings, DATA_ROOT_ENV};

use crate::data::{load_cifar10, load_mnist, subsample, synth_dataset, Dataset};
use crate::error::{Error, Result};
use crate::experiments::{
    compare_regularizers, double_descent_sweep, evaluate_features, loss, picard_run, svg_loglog, CompareConfig,
    PicardConfig, Problem, Regularizer, Series, SweepConfig, SweepResult,
};
use crate::hybrid::hybrid_solve_multi_monitored;
use crate::numerics::{svd, DEFAULT_RANK_TOL};
use crate::rfm::build_rfm;
use crate::spectral::{filtered_solution_multi, Filter, FilterSpec};
use crate::tuner::{tune_stopping_time, tune_weight_decay, TuneOptions, ALPHA_RANGE, TIME_RANGE};

#[derive(Debug, Parser)]
#[command(name = "hybrid-rfm", version, about = "Random feature models with spectral and hybrid regularization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train and evaluate one model (first width, first trial)
    Solve(RunConfig),
    /// Double-descent sweep over widths and trials
    Sweep(RunConfig),
    /// Picard diagnostics per width and trial
    Picard(RunConfig),
    /// Oracle-tuned gradient flow and weight decay against the hybrid method.
    /// Research only: requires --oracle.
    Compare(RunConfig),
    /// Tune t (reg = gf) or alpha (reg = wd) on a validation split, or on the
    /// test split with --oracle
    Tune(RunConfig),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Sweep(_) => "sweep",
            Command::Picard(_) => "picard",
            Command::Compare(_) => "compare",
            Command::Tune(_) => "tune",
        }
    }

    fn args(&self) -> &RunConfig {
        match self {
            Command::Solve(a) | Command::Sweep(a) | Command::Picard(a) | Command::Compare(a) | Command::Tune(a) => a,
        }
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            println!("wrote {}", out.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Output file name and contents.
type Artifact = (String, String);

fn execute(cmd: &Command) -> Result<PathBuf> {
    let flags = cmd.args().clone();
    let file = match &flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let env = RunConfig {
        data_root: std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from),
        ..RunConfig::default()
    };
    if let Some(c) = &file.command {
        if c != cmd.name() {
            return Err(Error::Config {
                key: "command".into(),
                reason: format!("config file is for `{c}`, not `{}`", cmd.name()),
            });
        }
    }
    let mut merged = flags.clone().over(env.over(file));
    merged.command = Some(cmd.name().to_string());
    let out = merged.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let jobs = merged.jobs;
    let mut settings = Settings::resolve(merged)?;
    settings.resolved.version = Some(env!("CARGO_PKG_VERSION").to_string());
    if matches!(cmd, Command::Compare(_)) && !settings.oracle {
        return Err(Error::Config {
            key: "oracle".into(),
            reason: "compare tunes gradient flow and weight decay on the test split; \
                     pass --oracle to acknowledge that these are oracle baselines"
                .into(),
        });
    }
    if matches!(cmd, Command::Tune(_)) {
        if !matches!(settings.regularizer, Regularizer::GradientFlow { .. } | Regularizer::WeightDecay { .. })
            && !matches!(settings.resolved.reg, Some(RegKind::Gf | RegKind::Wd))
        {
            return Err(Error::Config {
                key: "reg".into(),
                reason: "tune needs reg = gf or reg = wd".into(),
            });
        }
        if settings.eval_split == EvalSplit::Test && !settings.oracle {
            return Err(Error::Config {
                key: "oracle".into(),
                reason: "eval_split = test tunes on test data; pass --oracle to allow it".into(),
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config {
            key: "jobs".into(),
            reason: e.to_string(),
        })?;
    let artifacts = pool.install(|| -> Result<Vec<Artifact>> {
        let problem = load_problem(&settings.data)?;
        match cmd {
            Command::Solve(_) => solve(&settings, &problem),
            Command::Sweep(_) => sweep(&settings, &problem),
            Command::Picard(_) => picard(&settings, &problem),
            Command::Compare(_) => compare(&settings, &problem),
            Command::Tune(_) => tune(&settings, &problem),
        }
    })?;
    let manifest = toml::to_string(&settings.resolved).map_err(|e| Error::Config {
        key: "manifest".into(),
        reason: e.to_string(),
    })?;
    let mut all = artifacts;
    all.push(("manifest.toml".into(), manifest));
    write_all(&out, &all)?;
    Ok(out)
}

/// Writes every artifact or none: on failure the files already written (and
/// the directory, if this call created it) are removed.
fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    let created = !dir.exists();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (name, body) in artifacts {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, body) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            if created {
                let _ = fs::remove_dir(dir);
            }
            return Err(Error::io(path, e));
        }
        written.push(path);
    }
    Ok(())
}

pub fn load_problem(source: &DataSource) -> Result<Problem> {
    let (train, test) = match source {
        DataSource::Synthetic(spec) => {
            let p = synth_dataset(spec)?;
            (p.train, p.test)
        }
        DataSource::Mnist { root, n, n_test, seed } => {
            let train = load_mnist(root.join("train-images-idx3-ubyte"), root.join("train-labels-idx1-ubyte"))?;
            let test = load_mnist(root.join("t10k-images-idx3-ubyte"), root.join("t10k-labels-idx1-ubyte"))?;
            draw(train, test, *n, *n_test, *seed)?
        }
        DataSource::Cifar10 { root, n, n_test, seed } => {
            let batches: Vec<PathBuf> = (1..=5).map(|i| root.join(format!("data_batch_{i}.bin"))).collect();
            let train = load_cifar10(&batches)?;
            let test = load_cifar10(&[root.join("test_batch.bin")])?;
            draw(train, test, *n, *n_test, *seed)?
        }
    };
    Problem::new(train, test)
}

fn draw(train: Dataset, test: Dataset, n: usize, n_test: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    let pick = |d: &Dataset, k: usize, s: u64, key: &str| {
        subsample(d, k, s).map_err(|e| Error::Config {
            key: key.into(),
            reason: e.to_string(),
        })
    };
    Ok((pick(&train, n, seed, "n")?, pick(&test, n_test, seed.wrapping_add(1), "n_test")?))
}

fn sweep_config(s: &Settings) -> SweepConfig {
    SweepConfig {
        m_list: s.m_list.clone(),
        trials: s.trials,
        regularizer: s.regularizer,
        seed: s.seed,
        hybrid: s.hybrid,
        track_iterations: s.track_iterations,
    }
}

fn loss_chart(title: &str, results: &[&SweepResult]) -> String {
    let series: Vec<Series> = results
        .iter()
        .map(|r| Series {
            name: r.label.clone(),
            points: r.mean_test_losses().into_iter().map(|(m, l)| (m as f64, l)).collect(),
        })
        .collect();
    svg_loglog(title, "width m", "mean test loss", &series)
}

fn sweep_artifacts(prefix: &str, r: &SweepResult) -> Result<Vec<Artifact>> {
    let mut out = vec![
        (format!("{prefix}.csv"), r.records_csv()),
        (format!("{prefix}_aggregate.csv"), r.aggregates_csv()),
        (format!("{prefix}_summary.json"), r.summary_json()?),
    ];
    if r.records.iter().any(|x| x.test_curve.is_some()) {
        out.push((format!("{prefix}_curves.csv"), r.curves_csv()));
    }
    Ok(out)
}

fn sweep(s: &Settings, p: &Problem) -> Result<Vec<Artifact>> {
    let r = double_descent_sweep(&sweep_config(s), p)?;
    let mut out = sweep_artifacts("sweep", &r)?;
    let norms = Series {
        name: "mean norm of W".into(),
        points: r.aggregates.iter().map(|a| (a.m as f64, a.mean.solution_norm)).collect(),
    };
    out.push(("sweep.svg".into(), loss_chart("Test loss against width", &[&r])));
    out.push(("sweep_norm.svg".into(), svg_loglog("Solution norm against width", "width m", "norm", &[norms])));
    Ok(out)
}

fn solve(s: &Settings, p: &Problem) -> Result<Vec<Artifact>> {
    let mut cfg = sweep_config(s);
    cfg.m_list.truncate(1);
    cfg.trials = 1;
    let r = double_descent_sweep(&cfg, p)?;
    let mut out = vec![
        ("solve.csv".into(), r.records_csv()),
        ("solve.json".into(), serde_json::to_string_pretty(&r.records[0])?),
    ];
    if s.regularizer == Regularizer::Hybrid {
        // per-class traces of the same model
        let rec = &r.records[0];
        let rfm = build_rfm(p.train.n_features(), rec.m, rec.seed)?;
        let z = rfm.featurize(&p.train.y, &p.train.name)?.z;
        let zt = rfm.featurize(&p.test.y, &p.test.name)?.z;
        let monitor = s.track_iterations.then_some((&zt, &p.test.c));
        let sol = hybrid_solve_multi_monitored(&z, &p.train.c, &s.hybrid, monitor)?;
        let mut csv = String::from("class,k,alpha,gcv,train_loss,test_loss\n");
        for (j, t) in sol.traces.iter().enumerate() {
            for line in t.iter().flat_map(|t| t.to_csv().lines().skip(1).map(str::to_string).collect::<Vec<_>>()) {
                csv.push_str(&format!("{j},{line}\n"));
            }
        }
        out.push(("trace.csv".into(), csv));
    }
    Ok(out)
}

fn picard(s: &Settings, p: &Problem) -> Result<Vec<Artifact>> {
    let cfg = PicardConfig {
        m_list: s.m_list.clone(),
        trials: s.trials,
        seed: s.seed,
        class: s.picard_class,
    };
    let report = picard_run(&cfg, p)?;
    let mut out = Vec::new();
    for t in &report.trials {
        out.push((format!("picard_m{}_trial{}.csv", t.m, t.trial), t.data.to_csv()));
    }
    let mut summary = Vec::new();
    for (m, data) in &report.averaged {
        out.push((format!("picard_m{m}_mean.csv"), data.to_csv()));
        let pts = |f: fn(&crate::spectral::PicardRow) -> f64| {
            data.rows.iter().enumerate().map(|(j, r)| ((j + 1) as f64, f(r))).collect()
        };
        let series = [
            Series { name: "sigma_j".into(), points: pts(|r| r.sigma) },
            Series { name: "|u_j^T c|".into(), points: pts(|r| r.coef.abs()) },
            Series { name: "ratio".into(), points: pts(|r| r.ratio) },
        ];
        out.push((format!("picard_m{m}.svg"), svg_loglog(&format!("Picard plot, m = {m}"), "index j", "value", &series)));
        summary.push(serde_json::json!({ "m": m, "decile_surge": report.surge(*m) }));
    }
    let seeds: Vec<_> = report
        .trials
        .iter()
        .map(|t| serde_json::json!({ "m": t.m, "trial": t.trial, "seed": t.seed }))
        .collect();
    out.push((
        "picard_summary.json".into(),
        serde_json::to_string_pretty(&serde_json::json!({ "widths": summary, "seeds": seeds }))?,
    ));
    Ok(out)
}

fn compare(s: &Settings, p: &Problem) -> Result<Vec<Artifact>> {
    let cfg = CompareConfig {
        m_list: s.m_list.clone(),
        trials: s.trials,
        seed: s.seed,
        hybrid: s.hybrid,
        grid_points: s.grid_points,
        refine_evals: s.refine_evals,
        alpha_range: ALPHA_RANGE,
        time_range: TIME_RANGE,
        oracle: s.oracle,
        track_iterations: s.track_iterations,
    };
    let c = compare_regularizers(&cfg, p)?;
    let mut out = Vec::new();
    for r in c.results() {
        out.extend(sweep_artifacts(&format!("compare_{}", r.label.replace('-', "_")), r)?);
    }
    out.push(("compare.svg".into(), loss_chart("Oracle baselines and hybrid", &c.results())));
    Ok(out)
}

fn tune(s: &Settings, p: &Problem) -> Result<Vec<Artifact>> {
    let m = s.m_list[0];
    let (fit, eval) = match s.eval_split {
        EvalSplit::Test => (p.train.clone(), p.test.clone()),
        EvalSplit::Validation => {
            let n = p.train.len();
            let held = ((n as f64) * s.validation_fraction).round() as usize;
            if held == 0 || held >= n {
                return Err(Error::Config {
                    key: "validation_fraction".into(),
                    reason: format!("leaves {held} of {n} rows for validation"),
                });
            }
            let fit_idx: Vec<usize> = (0..n - held).collect();
            let val_idx: Vec<usize> = (n - held..n).collect();
            (
                p.train.select(&fit_idx, format!("{}-fit", p.train.name))?,
                p.train.select(&val_idx, format!("{}-validation", p.train.name))?,
            )
        }
    };
    let seed = crate::experiments::trial_seed(s.seed, m, 0);
    let rfm = build_rfm(p.train.n_features(), m, seed)?;
    let z = rfm.featurize(&fit.y, &fit.name)?.z;
    let z_eval = rfm.featurize(&eval.y, &eval.name)?.z;
    let z_test = rfm.featurize(&p.test.y, &p.test.name)?.z;
    let svd_z = svd(&z, DEFAULT_RANK_TOL)?;
    let opts = TuneOptions {
        grid_points: s.grid_points,
        refine_evals: s.refine_evals,
    };
    let objective = |w: &crate::Matrix| loss(&z_eval, w, &eval.c);
    let (result, make): (_, fn(f64) -> Filter) = match s.resolved.reg {
        Some(RegKind::Gf) => (tune_stopping_time(&svd_z, &fit.c, objective, TIME_RANGE, &opts)?, Filter::GradientFlow),
        _ => (tune_weight_decay(&svd_z, &fit.c, objective, ALPHA_RANGE, &opts)?, Filter::WeightDecay),
    };
    let spec = FilterSpec::for_svd(make(result.best_hyperparameter), &svd_z)?;
    let w = filtered_solution_multi(&svd_z, &fit.c, &spec)?;
    let metrics = evaluate_features(&z, &z_test, &w, &fit, &p.test)?;
    let oracle = s.eval_split == EvalSplit::Test;
    let summary = serde_json::json!({
        "label": if oracle { "oracle" } else { "validation" },
        "oracle": oracle,
        "m": m,
        "seed": seed,
        "filter": make(result.best_hyperparameter),
        "best_hyperparameter": result.best_hyperparameter,
        "best_loss": result.best_loss,
        "evaluations": result.evaluations,
        "method": result.method,
        "metrics": metrics,
    });
    Ok(vec![
        ("tune_grid.csv".into(), result.grid_csv()),
        ("tune.json".into(), serde_json::to_string_pretty(&summary)?),
    ])
}
