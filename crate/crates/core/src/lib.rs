//! Random feature models trained with regularized least squares.
//!
//! A random feature model maps inputs through a fixed random ReLU layer and
//! fits a linear read-out. At the interpolation threshold (width equal to the
//! number of training samples) the unregularized fit is badly ill-posed and
//! the test error spikes. This crate provides the tools to study and remove
//! that spike:
//!
//! - [`spectral`]: SVD filter-factor solutions (truncated SVD, gradient
//!   flow, weight decay) and Picard diagnostics.
//! - [`hybrid`]: LSQR on a Golub-Kahan bidiagonalization with weight decay
//!   re-selected at every iteration by generalized cross-validation on the
//!   projected problem.
//! - [`tuner`]: grid-then-refine oracle tuning for the spectral baselines.
//! - [`experiments`]: double-descent sweeps, Picard runs, and regularizer
//!   comparisons.
//!
//! Dense linear algebra is done with `nalgebra`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod experiments;
pub mod hybrid;
pub mod numerics;
pub mod rfm;
pub mod spectral;
pub mod tuner;

pub use error::{Error, Result};
pub use numerics::{Matrix, SvdTriple, Vector};
