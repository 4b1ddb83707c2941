//! Datasets: MNIST IDX and CIFAR-10 binary loaders, a seeded synthetic
//! generator, one-hot encoding and subsampling.
//!
//! Features are always scaled into `[0, 1]`; targets are `{0, 1}` one-hot.

mod cifar;
mod idx;
mod synth;

pub use cifar::{encode_cifar10, load_cifar10, parse_cifar10, CIFAR_FEATURES, CIFAR_RECORD};
pub use idx::{encode_idx_images, encode_idx_labels, load_mnist, parse_mnist, IDX_IMAGES, IDX_LABELS};
pub use synth::{synth_dataset, LinearTeacher, SynthProblem, SynthSpec};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `n × n_f`, entries in `[0, 1]`
    pub y: Matrix,
    pub labels: Vec<usize>,
    /// `n × n_c` one-hot targets
    pub c: Matrix,
    pub name: String,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(y: Matrix, labels: Vec<usize>, n_classes: usize, name: impl Into<String>) -> Result<Self> {
        if y.nrows() != labels.len() {
            return Err(Error::input(format!(
                "{} feature rows but {} labels",
                y.nrows(),
                labels.len()
            )));
        }
        if let Some(v) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::input(format!("feature value {v} outside [0, 1]")));
        }
        let c = one_hot(&labels, n_classes)?;
        Ok(Self {
            y,
            labels,
            c,
            name: name.into(),
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.y.ncols()
    }

    /// Rows `idx` in the given order.
    pub fn select(&self, idx: &[usize], name: impl Into<String>) -> Result<Self> {
        let y = self.y.select_rows(idx);
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(y, labels, self.n_classes, name)
    }
}

pub fn one_hot(labels: &[usize], n_classes: usize) -> Result<Matrix> {
    if n_classes == 0 {
        return Err(Error::input("need at least one class"));
    }
    let mut c = Matrix::zeros(labels.len(), n_classes);
    for (i, &l) in labels.iter().enumerate() {
        if l >= n_classes {
            return Err(Error::input(format!(
                "label {l} at row {i} is outside 0..{n_classes}"
            )));
        }
        c[(i, l)] = 1.0;
    }
    Ok(c)
}

/// Column index of the largest entry in each row (first one on ties).
pub fn argmax_rows(scores: &Matrix) -> Vec<usize> {
    (0..scores.nrows())
        .map(|i| {
            let row = scores.row(i);
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// `n` rows drawn uniformly without replacement.
pub fn subsample(d: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n > d.len() {
        return Err(Error::input(format!(
            "cannot draw {n} samples from a dataset of {}",
            d.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = index::sample(&mut rng, d.len(), n).into_vec();
    d.select(&idx, format!("{}[{n}@{seed}]", d.name))
}
