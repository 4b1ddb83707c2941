//! Hybrid regularization: LSQR iterations on a Golub-Kahan
//! bidiagonalization of `Z`, with the weight-decay parameter re-chosen at
//! every iteration by minimizing GCV on the projected problem.
//!
//! No validation data is needed; the only knob is the iteration budget,
//! which defaults to `min(m, n, 1024)`.

mod bidiag;
mod projected;
mod solve;

pub use bidiag::{BidiagState, Step, BREAKDOWN_TOL};
pub use projected::{
    gcv_value, projected_tikhonov, select_alpha, select_alpha_from, AlphaChoice, AlphaSearch,
    Bidiagonal, ProjectedSpectrum,
};
pub use solve::{
    hybrid_solve, hybrid_solve_monitored, hybrid_solve_multi, hybrid_solve_multi_monitored,
    HybridOptions, HybridSolution, HybridTrace, IterationRecord, MultiSolution, StopReason,
    TestMonitor, DEFAULT_MAX_ITERS,
};
