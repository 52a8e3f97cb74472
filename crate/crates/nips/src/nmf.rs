//! Sparsity-regularized low-rank matrix factorization
//! `min_{X,A >= 0} 1/2 ||Y - XA||_F^2 + lambda ||X||_1 + gamma ||A||_1`.
//!
//! The coefficient matrix is eliminated: each column contributes
//! `f_t(X) = min_{a >= 0} 1/2 ||y_t - X a||^2 + gamma ||a||_1`, a nonnegative
//! lasso solved by the batch solver, and `grad f_t(X) = (X a* - y_t) a*^T`.
//! The outer problem `sum_t f_t(X) + lambda ||X||_1 + ind(X >= 0)` is a
//! decomposable problem over mini-batched column blocks and runs on the
//! incremental solver. Column subproblems within one block are independent
//! and evaluate in parallel.

use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::batch::{solve_batch, SolveStatus, SolverConfig, TraceRecord};
use crate::error::{NipsError, Result};
use crate::incremental::{solve_incremental, DecomposableProblem, IncrementalConfig};
use crate::io::MatrixData;
use crate::model::{LipschitzTracker, SmoothOracle, LIPSCHITZ_FLOOR};
use crate::parallel::map_collect;
use crate::prox::{norm2, ProxRegularizer};

/// Inner (nonnegative lasso) solver settings.
#[derive(Debug, Clone, Copy)]
pub struct InnerSettings {
    /// Residual tolerance of the inner proximal-gradient solve. Loose inner
    /// tolerances are a legitimate source of the bounded gradient error the
    /// outer solver absorbs.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for InnerSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InnerStatus {
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// The factorization instance.
#[derive(Debug, Clone)]
pub struct NmfProblem {
    pub y: MatrixData,
    pub rank: usize,
    /// l1 weight on X.
    pub lambda: f64,
    /// l1 weight on each column of A.
    pub gamma: f64,
    /// Columns per mini-batch block.
    pub minibatch: usize,
    pub inner: InnerSettings,
}

impl NmfProblem {
    pub fn new(y: MatrixData, rank: usize, lambda: f64, gamma: f64) -> Result<Self> {
        if rank == 0 || rank > y.nrows().min(y.ncols()) {
            return Err(NipsError::InvalidInput(format!(
                "rank {rank} outside 1..=min({}, {})",
                y.nrows(),
                y.ncols()
            )));
        }
        if !(lambda >= 0.0) || !(gamma >= 0.0) {
            return Err(NipsError::InvalidInput(
                "penalties must be nonnegative".into(),
            ));
        }
        if !y.all_finite() {
            return Err(NipsError::InvalidInput(
                "data matrix contains non-finite entries".into(),
            ));
        }
        let minibatch = y.ncols().div_ceil(10);
        Ok(Self {
            y,
            rank,
            lambda,
            gamma,
            minibatch,
            inner: InnerSettings::default(),
        })
    }

    pub fn with_minibatch(mut self, minibatch: usize) -> Result<Self> {
        if minibatch == 0 {
            return Err(NipsError::InvalidInput("minibatch must be at least 1".into()));
        }
        self.minibatch = minibatch;
        Ok(self)
    }

    pub fn with_inner(mut self, inner: InnerSettings) -> Self {
        self.inner = inner;
        self
    }
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
fn spectral_norm_sym(mat: &Array2<f64>) -> f64 {
    let n = mat.nrows();
    let mut v = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0f64;
    for _ in 0..200 {
        let w = mat.dot(&v);
        let norm = norm2(&w);
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w.mapv(|x| x / norm);
        if (next - lambda).abs() <= 1e-13 * (1.0 + next.abs()) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Nonnegative lasso `min_{a >= 0} 1/2 ||y - X a||^2 + gamma ||a||_1`, solved
/// by the batch solver with exact gradients; the inner Lipschitz constant is
/// the spectral norm of `X^T X` from power iteration.
pub fn subproblem_solve(
    x_mat: &Array2<f64>,
    y_col: &Array1<f64>,
    gamma: f64,
    settings: &InnerSettings,
) -> Result<(Array1<f64>, InnerStatus)> {
    if x_mat.nrows() != y_col.len() {
        return Err(NipsError::DimensionMismatch {
            expected: x_mat.nrows(),
            got: y_col.len(),
        });
    }
    if x_mat.iter().any(|v| !v.is_finite()) {
        return Err(NipsError::InvalidInput("X contains non-finite entries".into()));
    }
    let xtx = x_mat.t().dot(x_mat);
    let xty = x_mat.t().dot(y_col);
    let y_sq = y_col.dot(y_col);
    inner_solve(&xtx, &xty, y_sq, gamma, settings)
}

fn inner_solve(
    xtx: &Array2<f64>,
    xty: &Array1<f64>,
    y_sq: f64,
    gamma: f64,
    settings: &InnerSettings,
) -> Result<(Array1<f64>, InnerStatus)> {
    let k = xty.len();
    let l = (1.05 * spectral_norm_sym(xtx)).max(LIPSCHITZ_FLOOR);
    let xtx_v = Arc::new(xtx.clone());
    let xty_v = Arc::new(xty.clone());
    let xtx_g = Arc::clone(&xtx_v);
    let xty_g = Arc::clone(&xty_v);
    let oracle = SmoothOracle::new(
        k,
        l,
        Arc::new(move |a: &Array1<f64>| {
            0.5 * a.dot(&xtx_v.dot(a)) - a.dot(&*xty_v) + 0.5 * y_sq
        }),
        Arc::new(move |a: &Array1<f64>| xtx_g.dot(a) - &*xty_g),
    )?;
    let problem =
        crate::model::CompositeProblem::new(oracle, ProxRegularizer::l1_nonneg(gamma)?);
    let c = 0.1 * (1.0 / l).min(1.0);
    let config = SolverConfig::new(c)
        .with_tol(settings.tol)
        .with_max_iters(settings.max_iters)
        .with_trace_every(usize::MAX);
    let out = solve_batch(&problem, &Array1::zeros(k), &config)?;
    let status = InnerStatus {
        converged: matches!(out.status, SolveStatus::Converged),
        iterations: out.iterations,
        residual_norm: out.trace.last().map(|r| r.rho_norm).unwrap_or(f64::NAN),
    };
    Ok((out.x, status))
}

/// Gradient of the column value function at its inner minimizer:
/// the outer product `(X a* - y_t) (a*)^T`.
pub fn ft_grad(x_mat: &Array2<f64>, y_col: &Array1<f64>, a_star: &Array1<f64>) -> Result<Array2<f64>> {
    if x_mat.nrows() != y_col.len() {
        return Err(NipsError::DimensionMismatch {
            expected: x_mat.nrows(),
            got: y_col.len(),
        });
    }
    if x_mat.ncols() != a_star.len() {
        return Err(NipsError::DimensionMismatch {
            expected: x_mat.ncols(),
            got: a_star.len(),
        });
    }
    let residual = x_mat.dot(a_star) - y_col;
    let (m, k) = x_mat.dim();
    Ok(Array2::from_shape_fn((m, k), |(i, j)| {
        residual[i] * a_star[j]
    }))
}

/// Full objective `1/2 ||Y - XA||_F^2 + lambda ||X||_1 + gamma ||A||_1`;
/// infinite if either factor has a negative entry.
pub fn nmf_objective(x_mat: &Array2<f64>, a_mat: &Array2<f64>, problem: &NmfProblem) -> f64 {
    if x_mat.iter().any(|&v| v < 0.0) || a_mat.iter().any(|&v| v < 0.0) {
        return f64::INFINITY;
    }
    let mut fit = 0.0;
    for t in 0..problem.y.ncols() {
        let y_col = problem.y.column(t);
        let r = x_mat.dot(&a_mat.column(t).to_owned()) - &y_col;
        fit += r.dot(&r);
    }
    0.5 * fit
        + problem.lambda * x_mat.iter().map(|v| v.abs()).sum::<f64>()
        + problem.gamma * a_mat.iter().map(|v| v.abs()).sum::<f64>()
}

/// Fraction of entries with `|entry| <= zero_tol`. Prox-generated zeros are
/// exact, so the factor-sparsity reports use `zero_tol = 0`.
pub fn sparsity(mat: &Array2<f64>, zero_tol: f64) -> f64 {
    if mat.is_empty() {
        return 1.0;
    }
    let zeros = mat.iter().filter(|v| v.abs() <= zero_tol).count();
    zeros as f64 / mat.len() as f64
}

/// How to initialize the dictionary factor.
#[derive(Debug, Clone)]
pub enum NmfInit {
    /// Entries uniform on [0, 1) scaled by `mean(Y) / rank`.
    Seeded(u64),
    Matrix(Array2<f64>),
}

#[derive(Debug, Clone)]
pub struct NmfSolveResult {
    pub x: Array2<f64>,
    pub a: Array2<f64>,
    pub trace: Vec<TraceRecord>,
    pub status: SolveStatus,
    /// `||Y - XA||_F / ||Y||_F` at the returned factors.
    pub fit: f64,
    /// Inner solves that hit their iteration cap (accepted and logged).
    pub inner_failures: usize,
}

struct BlockCtx {
    y: MatrixData,
    cols: std::ops::Range<usize>,
    gamma: f64,
    settings: InnerSettings,
    m: usize,
    k: usize,
    tracker: Arc<LipschitzTracker>,
    failures: Arc<AtomicUsize>,
}

impl BlockCtx {
    /// Solve every column subproblem of the block at the current X.
    fn solve_columns(&self, x_mat: &Array2<f64>) -> Result<Vec<(Array1<f64>, Array1<f64>)>> {
        let xtx = x_mat.t().dot(x_mat);
        let results = map_collect(self.cols.len(), |idx| {
            let t = self.cols.start + idx;
            let y_col = self.y.column(t);
            let xty = x_mat.t().dot(&y_col);
            let y_sq = y_col.dot(&y_col);
            inner_solve(&xtx, &xty, y_sq, self.gamma, &self.settings)
                .map(|(a, status)| (y_col, a, status))
        });
        let mut out = Vec::with_capacity(self.cols.len());
        for r in results {
            let (y_col, a, status) = r?;
            if !status.converged {
                self.failures.fetch_add(1, AtomicOrdering::Relaxed);
                log::debug!(
                    "inner solve stopped at residual {:.3e} after {} iterations",
                    status.residual_norm,
                    status.iterations
                );
            }
            out.push((y_col, a));
        }
        // The block gradient is (X A_B - Y_B) A_B^T, so the block curvature
        // is ||A_B||_2^2; the spectral norm of A_B A_B^T certifies it.
        let mut gram = Array2::zeros((self.k, self.k));
        for (_, a) in &out {
            for i in 0..self.k {
                for j in 0..self.k {
                    gram[[i, j]] += a[i] * a[j];
                }
            }
        }
        self.tracker.observe(1.1 * spectral_norm_sym(&gram));
        Ok(out)
    }
}

fn unflatten(v: &Array1<f64>, m: usize, k: usize) -> Array2<f64> {
    Array2::from_shape_vec((m, k), v.to_vec()).expect("flattened dictionary shape")
}

fn flatten(x: &Array2<f64>) -> Array1<f64> {
    Array1::from_iter(x.iter().cloned())
}

fn block_oracle(ctx: Arc<BlockCtx>) -> Result<SmoothOracle> {
    let dim = ctx.m * ctx.k;
    let value_ctx = Arc::clone(&ctx);
    let grad_ctx = Arc::clone(&ctx);
    let initial_l = ctx.tracker.current();
    SmoothOracle::new(
        dim,
        initial_l,
        Arc::new(move |xv: &Array1<f64>| {
            let x_mat = unflatten(xv, value_ctx.m, value_ctx.k);
            match value_ctx.solve_columns(&x_mat) {
                Ok(cols) => cols
                    .iter()
                    .map(|(y_col, a)| {
                        let r = x_mat.dot(a) - y_col;
                        0.5 * r.dot(&r) + value_ctx.gamma * a.sum()
                    })
                    .sum(),
                Err(_) => f64::NAN,
            }
        }),
        Arc::new(move |xv: &Array1<f64>| {
            let x_mat = unflatten(xv, grad_ctx.m, grad_ctx.k);
            let cols = grad_ctx
                .solve_columns(&x_mat)
                .expect("column subproblems share the caller's validated inputs");
            let mut grad = Array2::zeros((grad_ctx.m, grad_ctx.k));
            for (y_col, a) in &cols {
                let residual = x_mat.dot(a) - y_col;
                for i in 0..grad_ctx.m {
                    for j in 0..grad_ctx.k {
                        grad[[i, j]] += residual[i] * a[j];
                    }
                }
            }
            flatten(&grad)
        }),
    )
}

/// Assemble the eliminated-form decomposable problem for `problem` with the
/// Lipschitz tracker primed at `x0`. Returns the problem, the tracker, and
/// the shared inner-failure counter.
pub fn build_decomposable(
    problem: &NmfProblem,
    x0: &Array2<f64>,
) -> Result<(DecomposableProblem, Arc<LipschitzTracker>, Arc<AtomicUsize>)> {
    let m = problem.y.nrows();
    let t = problem.y.ncols();
    let k = problem.rank;
    if x0.dim() != (m, k) {
        return Err(NipsError::DimensionMismatch {
            expected: m * k,
            got: x0.len(),
        });
    }
    let tracker = Arc::new(LipschitzTracker::new(LIPSCHITZ_FLOOR));
    let failures = Arc::new(AtomicUsize::new(0));
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < t {
        let end = (start + problem.minibatch).min(t);
        let ctx = Arc::new(BlockCtx {
            y: problem.y.clone(),
            cols: start..end,
            gamma: problem.gamma,
            settings: problem.inner,
            m,
            k,
            tracker: Arc::clone(&tracker),
            failures: Arc::clone(&failures),
        });
        // prime the tracker with this block's curvature at x0
        ctx.solve_columns(x0)?;
        blocks.push(block_oracle(Arc::clone(&ctx))?);
        start = end;
    }
    let decomposable = DecomposableProblem::new(
        blocks,
        ProxRegularizer::l1_nonneg(problem.lambda)?,
    )?
    .with_lipschitz_tracker(Arc::clone(&tracker));
    Ok((decomposable, tracker, failures))
}

/// Initial Lipschitz estimate (the primed tracker value at `x0`); useful for
/// choosing the stepsize constant `c` before a run.
pub fn initial_lipschitz(problem: &NmfProblem, x0: &Array2<f64>) -> Result<f64> {
    let (_, tracker, _) = build_decomposable(problem, x0)?;
    Ok(tracker.current())
}

/// Outer configuration with a stepsize constant well inside the window of the
/// primed Lipschitz estimate `l0` (headroom for the tracker to grow).
pub fn default_outer_config(l0: f64) -> IncrementalConfig {
    let c = (0.02 / l0).min(0.1);
    IncrementalConfig::new(
        SolverConfig::new(c)
            .with_tol(1e-4)
            .with_max_iters(200)
            .with_trace_every(1),
        crate::incremental::OperatorVariant::MinorProx,
    )
}

/// The default dictionary initialization: entries uniform on [0, 1) scaled
/// by `mean(Y) / rank`, deterministic in the seed. The stream is
/// domain-separated from the data generators so that reusing one experiment
/// seed cannot hand the solver the planted factors as its starting point.
pub fn seeded_dictionary(problem: &NmfProblem, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1C7_1017_5EED_0001);
    let scale = problem.y.mean() / problem.rank as f64;
    Array2::from_shape_fn((problem.y.nrows(), problem.rank), |_| {
        rng.random::<f64>() * scale
    })
}

/// Recover the coefficient matrix column-by-column at a fixed dictionary.
pub fn recover_coefficients(
    problem: &NmfProblem,
    x_mat: &Array2<f64>,
) -> Result<(Array2<f64>, usize)> {
    let t = problem.y.ncols();
    let xtx = x_mat.t().dot(x_mat);
    let solved = map_collect(t, |j| {
        let y_col = problem.y.column(j);
        let xty = x_mat.t().dot(&y_col);
        inner_solve(&xtx, &xty, y_col.dot(&y_col), problem.gamma, &problem.inner)
    });
    let mut a_mat = Array2::zeros((problem.rank, t));
    let mut failures = 0;
    for (j, r) in solved.into_iter().enumerate() {
        let (a, status) = r?;
        if !status.converged {
            failures += 1;
        }
        for i in 0..problem.rank {
            a_mat[[i, j]] = a[i];
        }
    }
    Ok((a_mat, failures))
}

/// `||Y - XA||_F / ||Y||_F`.
pub fn relative_fit(problem: &NmfProblem, x_mat: &Array2<f64>, a_mat: &Array2<f64>) -> f64 {
    let mut num = 0.0;
    for t in 0..problem.y.ncols() {
        let r = x_mat.dot(&a_mat.column(t).to_owned()) - &problem.y.column(t);
        num += r.dot(&r);
    }
    let denom = problem.y.frobenius_norm();
    if denom == 0.0 {
        0.0
    } else {
        num.sqrt() / denom
    }
}

/// Factorize by running the incremental solver on the eliminated problem,
/// then recover `A` at the final dictionary. The trace's `phi` column is the
/// full objective evaluated through fresh inner solves.
///
/// `outer_config.minibatch` is ignored: columns are grouped by
/// `problem.minibatch` when the blocks are assembled.
pub fn solve_nmf(
    problem: &NmfProblem,
    init: &NmfInit,
    outer_config: &IncrementalConfig,
) -> Result<NmfSolveResult> {
    let mut x0 = match init {
        NmfInit::Seeded(seed) => seeded_dictionary(problem, *seed),
        NmfInit::Matrix(m) => m.clone(),
    };
    if x0.iter().all(|&v| v == 0.0) {
        match init {
            NmfInit::Seeded(seed) => {
                // degenerate draw (zero-mean data); try one reseed
                x0 = seeded_dictionary(problem, seed.wrapping_add(1));
                if x0.iter().all(|&v| v == 0.0) {
                    return Err(NipsError::Numerical(
                        "dictionary initialization is identically zero".into(),
                    ));
                }
            }
            NmfInit::Matrix(_) => {
                return Err(NipsError::Numerical(
                    "supplied dictionary initialization is identically zero".into(),
                ));
            }
        }
    }

    let (decomposable, _tracker, failures) = build_decomposable(problem, &x0)?;
    let mut config = outer_config.clone();
    config.minibatch = 1; // blocks already group problem.minibatch columns
    let out = solve_incremental(&decomposable, &flatten(&x0), &config)?;
    let x_mat = unflatten(&out.x, problem.y.nrows(), problem.rank);
    let (a_mat, recover_failures) = recover_coefficients(problem, &x_mat)?;
    let fit = relative_fit(problem, &x_mat, &a_mat);
    Ok(NmfSolveResult {
        x: x_mat,
        a: a_mat,
        trace: out.trace,
        status: out.status,
        fit,
        inner_failures: failures.load(AtomicOrdering::Relaxed) + recover_failures,
    })
}
