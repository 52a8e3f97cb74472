//! Batch solver: inexact forward-backward iteration
//! `x_{k+1} = prox_eta(x_k - eta (grad f(x_k) - e(x_k)))` with bounded,
//! possibly nonvanishing gradient errors, stepsize-window management, trace
//! recording, and per-iteration inequality auditing.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{NipsError, Result};
use crate::model::CompositeProblem;
use crate::prox::{ensure_finite, norm2, prox_apply};

/// Callback form of an adversarial error: `(k, x, eta) -> e`.
pub type ErrorCallback = Arc<dyn Fn(usize, &Array1<f64>, f64) -> Array1<f64> + Send + Sync>;

/// Gradient-error injection policy. Every emitted error `e` satisfies
/// `eta * ||e|| <= epsilon_bar()`; models clip or rescale to enforce it.
/// Sequences are deterministic given the seed.
#[derive(Clone)]
pub struct ErrorModel {
    pub kind: ErrorKind,
    pub seed: u64,
}

#[derive(Clone)]
pub enum ErrorKind {
    /// Exact gradients.
    None,
    /// Componentwise Gaussian noise rescaled so `eta * ||e|| <= bound`.
    SeededGaussianClipped { sigma: f64, bound: f64 },
    /// `magnitude * direction / ||direction||`, clipped to `eta ||e|| <= magnitude`.
    FixedDirection {
        direction: Array1<f64>,
        magnitude: f64,
    },
    /// Arbitrary callback `(k, x, eta) -> e`, clipped to `eta ||e|| <= bound`.
    Adversarial { callback: ErrorCallback, bound: f64 },
}

impl fmt::Debug for ErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            ErrorKind::None => "None".to_string(),
            ErrorKind::SeededGaussianClipped { sigma, bound } => {
                format!("SeededGaussianClipped(sigma={sigma}, bound={bound})")
            }
            ErrorKind::FixedDirection { magnitude, .. } => {
                format!("FixedDirection(magnitude={magnitude})")
            }
            ErrorKind::Adversarial { bound, .. } => format!("Adversarial(bound={bound})"),
        };
        write!(f, "ErrorModel({kind}, seed={})", self.seed)
    }
}

impl ErrorModel {
    pub fn none() -> Self {
        Self {
            kind: ErrorKind::None,
            seed: 0,
        }
    }

    pub fn gaussian(sigma: f64, bound: f64, seed: u64) -> Self {
        Self {
            kind: ErrorKind::SeededGaussianClipped { sigma, bound },
            seed,
        }
    }

    /// The fixed error level of the contract `eta ||e|| <= epsilon_bar`.
    pub fn epsilon_bar(&self) -> f64 {
        match &self.kind {
            ErrorKind::None => 0.0,
            ErrorKind::SeededGaussianClipped { bound, .. } => *bound,
            ErrorKind::FixedDirection { magnitude, .. } => *magnitude,
            ErrorKind::Adversarial { bound, .. } => *bound,
        }
    }
}

/// Per-solve sampler; owns the RNG stream so equal seeds give identical
/// error sequences.
pub(crate) struct ErrorSampler {
    model: ErrorModel,
    rng: ChaCha8Rng,
}

impl ErrorSampler {
    pub(crate) fn new(model: ErrorModel) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(model.seed);
        Self { model, rng }
    }

    fn clip(e: Array1<f64>, eta: f64, bound: f64) -> Array1<f64> {
        let scaled = eta * norm2(&e);
        if scaled > bound {
            let factor = bound / scaled;
            e.mapv(|v| v * factor)
        } else {
            e
        }
    }

    pub(crate) fn sample(&mut self, k: usize, x: &Array1<f64>, eta: f64) -> Array1<f64> {
        match &self.model.kind {
            ErrorKind::None => Array1::zeros(x.len()),
            ErrorKind::SeededGaussianClipped { sigma, bound } => {
                let normal = Normal::new(0.0, *sigma).expect("sigma must be finite");
                let e = Array1::from_iter((0..x.len()).map(|_| normal.sample(&mut self.rng)));
                Self::clip(e, eta, *bound)
            }
            ErrorKind::FixedDirection {
                direction,
                magnitude,
            } => {
                let n = norm2(direction);
                if n == 0.0 || *magnitude == 0.0 {
                    return Array1::zeros(x.len());
                }
                let e = direction.mapv(|v| v * magnitude / n);
                Self::clip(e, eta, *magnitude)
            }
            ErrorKind::Adversarial { callback, bound } => {
                Self::clip(callback(k, x, eta), eta, *bound)
            }
        }
    }
}

/// Stepsize policy inside the window `[c, min(1, 2/L - c)]`.
#[derive(Clone)]
pub enum EtaSchedule {
    /// `max(c, 0.9 * min(1, 2/L - c))`, recomputed from the current L.
    Default,
    /// A fixed value, validated against the window.
    Constant(f64),
    /// `(k, L) -> eta`, validated against the window each iteration.
    Custom(Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for EtaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Default => write!(f, "Default"),
            Self::Constant(v) => write!(f, "Constant({v})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Stepsize for iteration `k`. Requires `0 < c < 1/L` and a nonempty window
/// (`c <= min(1, 2/L - c)`); the default schedule returns
/// `max(c, 0.9 * min(1, 2/L - c))`.
pub fn stepsize_for(l: f64, c: f64, k: usize, schedule: &EtaSchedule) -> Result<f64> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(NipsError::Config(format!(
            "Lipschitz constant must be positive and finite, got {l}"
        )));
    }
    if !(c > 0.0) || c >= 1.0 / l {
        return Err(NipsError::Config(format!(
            "stepsize constant must satisfy 0 < c < 1/L, got c={c}, 1/L={}",
            1.0 / l
        )));
    }
    let upper = (2.0 / l - c).min(1.0);
    if upper < c {
        return Err(NipsError::Config(format!(
            "empty stepsize window: c={c} exceeds min(1, 2/L - c)={upper}"
        )));
    }
    let eta = match schedule {
        EtaSchedule::Default => c.max(0.9 * upper),
        EtaSchedule::Constant(v) => *v,
        EtaSchedule::Custom(f) => f(k, l),
    };
    let slack = 1e-12 * (1.0 + upper);
    if eta < c - slack || eta > upper + slack {
        return Err(NipsError::Config(format!(
            "eta={eta} outside the stepsize window [{c}, {upper}]"
        )));
    }
    Ok(eta)
}

/// Solver configuration shared by the batch and incremental drivers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Lower stepsize constant; must satisfy `0 < c < 1/L`.
    pub c: f64,
    pub eta: EtaSchedule,
    pub max_outer_iters: usize,
    pub residual_tol: f64,
    pub error_model: ErrorModel,
    /// Record every n-th iteration (the first and last are always kept).
    pub trace_every: usize,
    pub audit_inequalities: bool,
}

impl SolverConfig {
    pub fn new(c: f64) -> Self {
        Self {
            c,
            eta: EtaSchedule::Default,
            max_outer_iters: 1000,
            residual_tol: 1e-8,
            error_model: ErrorModel::none(),
            trace_every: 1,
            audit_inequalities: false,
        }
    }

    pub fn with_eta(mut self, eta: EtaSchedule) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_outer_iters = n;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn with_error_model(mut self, m: ErrorModel) -> Self {
        self.error_model = m;
        self
    }

    pub fn with_audit(mut self, on: bool) -> Self {
        self.audit_inequalities = on;
        self
    }

    pub fn with_trace_every(mut self, n: usize) -> Self {
        self.trace_every = n;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.trace_every == 0 {
            return Err(NipsError::Config("trace_every must be at least 1".into()));
        }
        if !(self.residual_tol >= 0.0) {
            return Err(NipsError::Config("residual_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One recorded outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub eta: f64,
    /// Objective at the iterate.
    pub phi: f64,
    /// Proximal-residual norm at the iterate.
    pub rho_norm: f64,
    /// Norm of the gradient error applied when leaving this iterate.
    pub err_norm: f64,
    /// `||x_{k+1} - x_k||`; zero on the terminal record.
    pub step_norm: f64,
    pub wall_ms: f64,
}

impl TraceRecord {
    /// Bitwise equality of the mathematical fields; wall-clock time is
    /// measurement metadata and excluded.
    pub fn same_math(&self, other: &Self) -> bool {
        self.k == other.k
            && self.eta.to_bits() == other.eta.to_bits()
            && self.phi.to_bits() == other.phi.to_bits()
            && self.rho_norm.to_bits() == other.rho_norm.to_bits()
            && self.err_norm.to_bits() == other.err_norm.to_bits()
            && self.step_norm.to_bits() == other.step_norm.to_bits()
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    AuditViolation(AuditFailure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditFailure {
    pub k: usize,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: Array1<f64>,
    pub trace: Vec<TraceRecord>,
    pub status: SolveStatus,
    /// With nonvanishing errors tail iterates can wander, so the best
    /// objective value seen is frozen and reported alongside the last iterate.
    pub best_x: Array1<f64>,
    pub best_phi: f64,
    pub iterations: usize,
}

/// One step of the inexact forward-backward iteration:
/// `prox_eta(x - eta * (grad f(x) - e))`.
pub fn nips_step(
    problem: &CompositeProblem,
    x: &Array1<f64>,
    eta: f64,
    e: &Array1<f64>,
) -> Result<Array1<f64>> {
    if !(eta > 0.0) {
        return Err(NipsError::InvalidInput(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let grad = problem.smooth.grad(x);
    let shifted = x - &(eta * &(&grad - e));
    prox_apply(&problem.reg, &shifted, eta)
}

/// Right-hand side of the per-iteration descent bound:
/// `(2 - L eta) / (2 eta) * ||dx||^2 - (eps / eta) * ||dx||`.
/// An accepted iteration must satisfy `phi(x) - phi(x_next) >=` this value.
pub fn descent_gap_bound(
    x: &Array1<f64>,
    x_next: &Array1<f64>,
    eta: f64,
    eps: f64,
    l: f64,
) -> f64 {
    let dx = norm2(&(x_next - x));
    (2.0 - l * eta) / (2.0 * eta) * dx * dx - eps / eta * dx
}

/// The guaranteed-progress constants `(a1, a2, a3)`; all positive whenever
/// `0 < c < 1/L`.
pub fn progress_constants(c: f64, l: f64) -> Result<(f64, f64, f64)> {
    if !(c > 0.0) || c >= 1.0 / l {
        return Err(NipsError::Config(format!(
            "constants require 0 < c < 1/L, got c={c}, L={l}"
        )));
    }
    let a1 = l * l * c.powi(3) / (2.0 * (2.0 - l * c));
    let a2 = l * l * c * c / (2.0 - c * l) + 1.0 / c;
    let a3 = 1.0 / c - l * l * c / (2.0 * (2.0 - c * l));
    Ok((a1, a2, a3))
}

/// Guaranteed objective decrease `a1 ||rho||^2 - a2 ||rho|| eps - a3 eps^2`.
/// Verifies positivity of the constants as a side effect.
pub fn h_lower_bound(rho_norm: f64, eps: f64, c: f64, l: f64) -> Result<f64> {
    let (a1, a2, a3) = progress_constants(c, l)?;
    if a1 <= 0.0 || a2 <= 0.0 || a3 <= 0.0 {
        return Err(NipsError::Numerical(format!(
            "progress constants must be positive, got a1={a1}, a2={a2}, a3={a3}"
        )));
    }
    Ok(a1 * rho_norm * rho_norm - a2 * rho_norm * eps - a3 * eps * eps)
}

/// Everything the per-iteration audit needs from one accepted step.
#[derive(Debug, Clone)]
pub struct AuditInputs<'a> {
    pub x: &'a Array1<f64>,
    pub x_next: &'a Array1<f64>,
    pub eta: f64,
    pub error: &'a Array1<f64>,
    pub phi_x: f64,
    pub phi_next: f64,
    pub rho_norm: f64,
    pub epsilon_bar: f64,
    pub c: f64,
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub descent_ok: bool,
    pub step_bounds_ok: bool,
    pub error_contract_ok: bool,
    pub slack: f64,
    pub detail: String,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.descent_ok && self.step_bounds_ok && self.error_contract_ok
    }
}

/// Per-iteration inequality audit: (i) the descent gap, (ii) the two-sided
/// step bounds `c ||rho|| - eps <= ||dx|| <= ||rho|| + eps`, (iii) the error
/// contract `eta ||e|| <= epsilon_bar`. `eps` is the measured `eta ||e||`,
/// the tightest admissible error level for this iteration. Slack is
/// `1e-7 * (1 + |phi|)` of floating-point headroom; the inequalities are
/// exact in real arithmetic.
pub fn audit_iteration(inp: &AuditInputs<'_>) -> AuditReport {
    let slack = 1e-7 * (1.0 + inp.phi_x.abs());
    let eps = inp.eta * norm2(inp.error);
    let dx = norm2(&(inp.x_next - inp.x));

    let gap = descent_gap_bound(inp.x, inp.x_next, inp.eta, eps, inp.lipschitz);
    let descent_ok = inp.phi_x - inp.phi_next >= gap - slack;

    let lower = inp.c * inp.rho_norm - eps;
    let upper = inp.rho_norm + eps;
    let step_bounds_ok = dx >= lower - slack && dx <= upper + slack;

    let error_contract_ok = eps <= inp.epsilon_bar + 1e-12 * (1.0 + inp.epsilon_bar);

    let detail = format!(
        "descent {:.6e} >= {:.6e}; step {lower:.6e} <= {dx:.6e} <= {upper:.6e}; eps {eps:.6e} <= {:.6e}",
        inp.phi_x - inp.phi_next,
        gap,
        inp.epsilon_bar
    );
    AuditReport {
        descent_ok,
        step_bounds_ok,
        error_contract_ok,
        slack,
        detail,
    }
}

/// Run the batch solver, streaming each recorded trace row to `observer`.
pub fn solve_batch_with<F>(
    problem: &CompositeProblem,
    x0: &Array1<f64>,
    config: &SolverConfig,
    mut observer: F,
) -> Result<SolveResult>
where
    F: FnMut(&TraceRecord),
{
    config.validate()?;
    ensure_finite("x0", x0)?;
    let phi0 = problem.objective(x0);
    if !phi0.is_finite() {
        return Err(NipsError::InvalidInput(
            "x0 is infeasible: objective is not finite".into(),
        ));
    }

    let start = Instant::now();
    let epsilon_bar = config.error_model.epsilon_bar();
    let mut sampler = ErrorSampler::new(config.error_model.clone());
    let mut x = x0.clone();
    let mut trace = Vec::new();
    let mut best_x = x.clone();
    let mut best_phi = phi0;
    let mut iterations = 0;

    let mut k = 0usize;
    let (status, final_record) = loop {
        let l = problem.current_lipschitz();
        let eta = stepsize_for(l, config.c, k, &config.eta)?;
        let grad = problem.smooth.grad(&x);
        let rho = problem.residual_with_grad(&x, &grad)?;
        let rho_norm = norm2(&rho);
        let phi = problem.objective(&x);
        if phi < best_phi {
            best_phi = phi;
            best_x = x.clone();
        }

        let terminal = |err_norm: f64, step_norm: f64, start: &Instant| TraceRecord {
            k,
            eta,
            phi,
            rho_norm,
            err_norm,
            step_norm,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };

        if rho_norm <= config.residual_tol {
            break (SolveStatus::Converged, terminal(0.0, 0.0, &start));
        }
        if k >= config.max_outer_iters {
            break (SolveStatus::MaxIters, terminal(0.0, 0.0, &start));
        }

        let e = sampler.sample(k, &x, eta);
        let shifted = &x - &(eta * &(&grad - &e));
        let x_next = prox_apply(&problem.reg, &shifted, eta)?;
        let step_norm = norm2(&(&x_next - &x));
        let err_norm = norm2(&e);
        iterations += 1;

        let mut audit_failed = None;
        if config.audit_inequalities {
            let phi_next = problem.objective(&x_next);
            let report = audit_iteration(&AuditInputs {
                x: &x,
                x_next: &x_next,
                eta,
                error: &e,
                phi_x: phi,
                phi_next,
                rho_norm,
                epsilon_bar,
                c: config.c,
                lipschitz: l,
            });
            if !report.passed() {
                audit_failed = Some(AuditFailure {
                    k,
                    detail: report.detail,
                });
            }
        }

        if k.is_multiple_of(config.trace_every) || audit_failed.is_some() {
            let record = TraceRecord {
                k,
                eta,
                phi,
                rho_norm,
                err_norm,
                step_norm,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            observer(&record);
            trace.push(record);
        }

        if let Some(failure) = audit_failed {
            return Ok(SolveResult {
                x: x_next,
                trace,
                status: SolveStatus::AuditViolation(failure),
                best_x,
                best_phi,
                iterations,
            });
        }
        x = x_next;
        k += 1;
    };

    observer(&final_record);
    trace.push(final_record);
    Ok(SolveResult {
        x,
        trace,
        status,
        best_x,
        best_phi,
        iterations,
    })
}

/// Iterate until `||rho(x_k)|| <= residual_tol` or the iteration budget is
/// exhausted; returns the final iterate, the recorded trace, and the status.
pub fn solve_batch(
    problem: &CompositeProblem,
    x0: &Array1<f64>,
    config: &SolverConfig,
) -> Result<SolveResult> {
    solve_batch_with(problem, x0, config, |_| {})
}
