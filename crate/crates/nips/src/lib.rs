//! Inexact proximal splitting for nonconvex composite objectives
//! `Phi(x) = f(x) + g(x)`, where `f` is smooth (possibly nonconvex) and `g`
//! is convex, lower semi-continuous, and prox-capable.
//!
//! The crate provides:
//!
//! - [`prox`]: a library of proximity operators and projections, including
//!   composed and Dykstra-computed operators;
//! - [`model`]: the [`CompositeProblem`] abstraction and the
//!   proximal-residual stationarity measure;
//! - [`batch`]: the forward-backward solver with bounded, nonvanishing
//!   gradient errors and per-iteration inequality audits;
//! - [`incremental`]: the incremental variant for decomposable objectives
//!   `sum_t f_t + g`, with measured incrementality error and its bounds;
//! - [`nmf`]: sparsity-regularized nonnegative matrix factorization built on
//!   the incremental solver;
//! - [`oracle`]: brute-force grid oracles and property sweeps used for
//!   verification;
//! - [`io`] / [`synth`]: matrix and trace file formats plus seeded synthetic
//!   data generators;
//! - [`verify`]: the named property suites behind `nips verify`.
//!
//! Column subproblems, grid scans, and property sweeps run on rayon when the
//! default `parallel` feature is enabled and fall back to sequential loops
//! without it; results are identical either way.

// `!(x > 0.0)` deliberately treats NaN as out of range in input checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod error;
pub mod incremental;
pub mod io;
pub mod model;
pub mod nmf;
pub mod oracle;
mod parallel;
pub mod problems;
pub mod prox;
pub mod synth;
pub mod verify;

pub use batch::{
    solve_batch, solve_batch_with, ErrorKind, ErrorModel, EtaSchedule, SolveResult, SolveStatus,
    SolverConfig, TraceRecord,
};
pub use error::{NipsError, Result};
pub use incremental::{
    solve_incremental, solve_incremental_with, DecomposableProblem, IncrementalConfig,
    OperatorVariant, Ordering,
};
pub use model::{CompositeProblem, LipschitzTracker, SmoothOracle};
pub use nmf::NmfProblem;
pub use prox::ProxRegularizer;
