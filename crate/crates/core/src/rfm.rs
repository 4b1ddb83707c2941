//! Random ReLU feature map `Z = [relu(Y·K + 1·bᵀ), 1]`.
//!
//! Each of the `m − 1` random directions is the column of `K` stacked with
//! its bias entry, drawn uniformly from the unit sphere in `ℝ^{n_f+1}`.
//! Parameters are fully determined by `(n_f, m, seed)`, so only the
//! [`RfmSpec`] needs to be stored to replay an experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ensure_finite, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
        }
    }
}

/// Replayable description of a feature map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfmSpec {
    pub input_dim: usize,
    pub width: usize,
    pub seed: u64,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct RfmParams {
    spec: RfmSpec,
    /// `n_f × (m − 1)`
    k: Matrix,
    /// length `m − 1`
    b: Vector,
}

/// Output of [`RfmParams::featurize`]; the last column is all ones.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub z: Matrix,
    pub rfm: RfmSpec,
    pub dataset: String,
}

/// Uniform sample on the unit sphere in `ℝ^dim` (normalized Gaussian).
pub fn sample_unit_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Vector> {
    if dim == 0 {
        return Err(Error::input("sphere dimension must be at least 1"));
    }
    loop {
        let g = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > f64::MIN_POSITIVE && norm.is_finite() {
            return Ok(g / norm);
        }
    }
}

pub fn build_rfm(input_dim: usize, width: usize, seed: u64) -> Result<RfmParams> {
    RfmParams::from_spec(RfmSpec {
        input_dim,
        width,
        seed,
        activation: Activation::Relu,
    })
}

impl RfmParams {
    pub fn from_spec(spec: RfmSpec) -> Result<Self> {
        if spec.input_dim == 0 {
            return Err(Error::input("input dimension n_f must be at least 1"));
        }
        if spec.width < 2 {
            return Err(Error::input(format!(
                "feature width m = {} leaves no room for the bias column (need m >= 2)",
                spec.width
            )));
        }
        let n_f = spec.input_dim;
        let cols = spec.width - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut k = Matrix::zeros(n_f, cols);
        let mut b = Vector::zeros(cols);
        for j in 0..cols {
            let dir = sample_unit_sphere(n_f + 1, &mut rng)?;
            k.column_mut(j).copy_from(&dir.rows(0, n_f));
            b[j] = dir[n_f];
        }
        Ok(Self { spec, k, b })
    }

    pub fn spec(&self) -> &RfmSpec {
        &self.spec
    }

    pub fn width(&self) -> usize {
        self.spec.width
    }

    pub fn weights(&self) -> &Matrix {
        &self.k
    }

    pub fn bias(&self) -> &Vector {
        &self.b
    }

    /// Applies the feature map row-wise to `y` (`n × n_f`), giving `n × m`.
    pub fn featurize(&self, y: &Matrix, dataset: &str) -> Result<FeatureMatrix> {
        ensure_finite(y, "input features")?;
        if y.ncols() != self.spec.input_dim {
            return Err(Error::input(format!(
                "input has {} columns but the feature map expects n_f = {}",
                y.ncols(),
                self.spec.input_dim
            )));
        }
        let n = y.nrows();
        let m = self.spec.width;
        let pre = y * &self.k;
        let act = self.spec.activation;
        let mut z = Matrix::zeros(n, m);
        for j in 0..m - 1 {
            let bj = self.b[j];
            for i in 0..n {
                z[(i, j)] = act.apply(pre[(i, j)] + bj);
            }
        }
        z.column_mut(m - 1).fill(1.0);
        Ok(FeatureMatrix {
            z,
            rfm: self.spec,
            dataset: dataset.to_string(),
        })
    }
}
