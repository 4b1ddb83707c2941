use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::{featurize, jobs};
use super::{check_widths, trial_error, Problem};
use crate::error::{Error, Result};
use crate::numerics::{svd, DEFAULT_RANK_TOL};
use crate::spectral::{picard_data, PicardData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub m_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// which one-hot column plays the role of `c`
    pub class: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            m_list: vec![128, 256, 512],
            trials: 5,
            seed: 0,
            class: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardTrial {
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub data: PicardData,
}

#[derive(Debug, Clone)]
pub struct PicardReport {
    pub trials: Vec<PicardTrial>,
    /// trial-averaged data per width, in `m_list` order
    pub averaged: Vec<(usize, PicardData)>,
}

impl PicardReport {
    /// Last-decile over first-decile median of the averaged ratio column.
    pub fn surge(&self, m: usize) -> Option<f64> {
        let (_, data) = self.averaged.iter().find(|(w, _)| *w == m)?;
        let (head, tail) = data.decile_medians()?;
        Some(tail / head)
    }
}

pub fn picard_run(cfg: &PicardConfig, problem: &Problem) -> Result<PicardReport> {
    check_widths(&cfg.m_list, cfg.trials)?;
    if cfg.class >= problem.train.n_classes {
        return Err(Error::input(format!(
            "class {} out of range for {} classes",
            cfg.class, problem.train.n_classes
        )));
    }
    let c = problem.train.c.column(cfg.class).into_owned();
    let trials = jobs(&cfg.m_list, cfg.trials)
        .into_par_iter()
        .map(|(m, t)| {
            let run = || -> Result<PicardTrial> {
                let f = featurize(problem, cfg.seed, m, t)?;
                let s = svd(&f.z, DEFAULT_RANK_TOL)?;
                Ok(PicardTrial {
                    m,
                    trial: t,
                    seed: f.seed,
                    data: picard_data(&s, &c)?,
                })
            };
            run().map_err(trial_error(m, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let averaged = trials
        .chunks(cfg.trials)
        .zip(&cfg.m_list)
        .map(|(chunk, &m)| {
            let runs: Vec<PicardData> = chunk.iter().map(|t| t.data.clone()).collect();
            (m, PicardData::average(&runs))
        })
        .collect();
    Ok(PicardReport { trials, averaged })
}
