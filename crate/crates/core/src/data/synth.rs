//! Seeded synthetic classification problem used in place of image data.
//!
//! Raw features are standard normal with a `1/j` covariance spectrum in a
//! random orthogonal basis, rescaled to unit RMS, then mapped by `v/3` and
//! clamped into `[0, 1]`, so roughly half of the entries sit at zero like
//! dark pixels. Clean labels come from a random linear teacher; a `noise`
//! fraction of labels is then redrawn uniformly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{argmax_rows, Dataset};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub n_test: usize,
    pub n_features: usize,
    pub n_classes: usize,
    /// fraction of labels redrawn uniformly at random
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 256,
            n_test: 1000,
            n_features: 128,
            n_classes: 10,
            noise: 0.2,
            seed: 0,
        }
    }
}

/// Linear scorer on the scaled features: `argmax((y − center)·W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTeacher {
    pub weights: Matrix,
    pub center: f64,
}

impl LinearTeacher {
    pub fn predict(&self, y: &Matrix) -> Vec<usize> {
        let shifted = y.map(|v| v - self.center);
        argmax_rows(&(shifted * &self.weights))
    }
}

#[derive(Debug, Clone)]
pub struct SynthProblem {
    pub train: Dataset,
    pub test: Dataset,
    pub teacher: LinearTeacher,
}

/// Width of the standardized range mapped onto `[0, 1]`.
const PIXEL_SPAN: f64 = 3.0;
/// Exponent of the power-law scaling applied to the feature directions.
const SPECTRUM_DECAY: f64 = 1.0;

fn shaped(raw: &Matrix, rng: &mut ChaCha8Rng) -> Matrix {
    let n_f = raw.ncols();
    let g = Matrix::from_fn(n_f, n_f, |_, _| rng.sample::<f64, _>(StandardNormal));
    let basis = g.qr().q();
    let scale = Vector::from_fn(n_f, |j, _| ((j + 1) as f64).powf(-SPECTRUM_DECAY));
    let x = raw * Matrix::from_diagonal(&scale) * basis;
    let rms = (x.norm_squared() / x.len() as f64).sqrt();
    if rms > 0.0 {
        x / rms
    } else {
        x
    }
}

pub fn synth_dataset(spec: &SynthSpec) -> Result<SynthProblem> {
    if spec.n == 0 || spec.n_test == 0 || spec.n_features == 0 || spec.n_classes == 0 {
        return Err(Error::input("synthetic sizes n, n_test, n_f, n_c must all be >= 1"));
    }
    if !(0.0..=1.0).contains(&spec.noise) {
        return Err(Error::input(format!("noise must lie in [0, 1], got {}", spec.noise)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_f = spec.n_features;
    let total = spec.n + spec.n_test;

    let weights = Matrix::from_fn(n_f, spec.n_classes, |_, _| rng.sample(StandardNormal));
    // row-major draw order so the stream does not depend on storage layout
    let mut raw = Matrix::zeros(total, n_f);
    for i in 0..total {
        for j in 0..n_f {
            raw[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let raw = shaped(&raw, &mut rng);
    let y_all = raw.map(|v| (v / PIXEL_SPAN).clamp(0.0, 1.0));
    let teacher = LinearTeacher { weights, center: 0.0 };

    let mut labels = teacher.predict(&y_all);
    for l in labels.iter_mut() {
        if spec.noise > 0.0 && rng.random::<f64>() < spec.noise {
            *l = rng.random_range(0..spec.n_classes);
        }
    }

    let train_idx: Vec<usize> = (0..spec.n).collect();
    let test_idx: Vec<usize> = (spec.n..total).collect();
    let all = Dataset::new(y_all, labels, spec.n_classes, "synthetic")?;
    Ok(SynthProblem {
        train: all.select(&train_idx, format!("synthetic-train@{}", spec.seed))?,
        test: all.select(&test_idx, format!("synthetic-test@{}", spec.seed))?,
        teacher,
    })
}
