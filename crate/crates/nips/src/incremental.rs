//! Incremental solver for decomposable objectives `sum_t f_t(x) + g(x)`.
//!
//! One major iteration sweeps the components once with cheap minor steps and
//! then applies the prox to the accumulated gradient:
//!
//! ```text
//! z_1 = x_k;  z_{t+1} = O(z_t - eta grad f_t(z_t)),   t = 1..T-1
//! x_{k+1} = prox_eta(x_k - eta * sum_t grad f_t(z_t))
//! ```
//!
//! The minor operator `O` is either the identity (prox once per major
//! iteration) or the prox itself (once per minor iteration). Evaluating the
//! component gradients at the minor iterates instead of `x_k` is exactly a
//! bounded gradient error, which the batch analysis absorbs; the solver can
//! measure that error and check it against its a-priori bounds.

use std::sync::Arc;
use std::time::Instant;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::batch::{
    stepsize_for, AuditFailure, ErrorKind, SolveResult, SolveStatus, SolverConfig, TraceRecord,
};
use crate::error::{NipsError, Result};
use crate::model::{CompositeProblem, LipschitzTracker, SmoothOracle};
use crate::prox::{ensure_finite, norm2, prox_apply, ProxRegularizer};

/// Which minor operator `O` to use. The major operator `M` is always the prox.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorVariant {
    /// `O = identity`: the regularizer is applied once per major iteration.
    MajorOnly,
    /// `O = prox`: the regularizer is applied at every minor iteration.
    MinorProx,
}

/// Component processing order within a major iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    Cyclic,
    /// Reshuffled before every major iteration, deterministically in the seed.
    Shuffled { seed: u64 },
}

impl Ordering {
    fn permutation(&self, count: usize, k: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..count).collect();
        if let Ordering::Shuffled { seed } = self {
            let mixed = seed.wrapping_add((k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut rng = ChaCha8Rng::seed_from_u64(mixed);
            order.shuffle(&mut rng);
        }
        order
    }
}

#[derive(Debug, Clone)]
pub struct IncrementalConfig {
    pub base: SolverConfig,
    pub variant: OperatorVariant,
    pub ordering: Ordering,
    /// Components per block; blocks act as single components.
    pub minibatch: usize,
}

impl IncrementalConfig {
    pub fn new(base: SolverConfig, variant: OperatorVariant) -> Self {
        Self {
            base,
            variant,
            ordering: Ordering::Cyclic,
            minibatch: 1,
        }
    }

    pub fn with_ordering(mut self, ordering: Ordering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn with_minibatch(mut self, minibatch: usize) -> Self {
        self.minibatch = minibatch;
        self
    }
}

/// A finite sum of smooth components with a shared prox regularizer.
#[derive(Clone)]
pub struct DecomposableProblem {
    components: Vec<SmoothOracle>,
    pub reg: ProxRegularizer,
    lipschitz_max: f64,
    tracker: Option<Arc<LipschitzTracker>>,
}

impl DecomposableProblem {
    pub fn new(components: Vec<SmoothOracle>, reg: ProxRegularizer) -> Result<Self> {
        if components.is_empty() {
            return Err(NipsError::InvalidInput(
                "need at least one component".into(),
            ));
        }
        let dim = components[0].dim();
        if components.iter().any(|c| c.dim() != dim) {
            return Err(NipsError::DimensionMismatch {
                expected: dim,
                got: components.iter().map(|c| c.dim()).find(|&d| d != dim).unwrap(),
            });
        }
        let lipschitz_max = components
            .iter()
            .map(|c| c.lipschitz())
            .fold(0.0, f64::max);
        Ok(Self {
            components,
            reg,
            lipschitz_max,
            tracker: None,
        })
    }

    pub fn with_lipschitz_tracker(mut self, tracker: Arc<LipschitzTracker>) -> Self {
        self.tracker = Some(tracker);
        self
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[SmoothOracle] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// `max_t L_t`, the constant the incremental stepsize window uses.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz_max
    }

    pub fn full_value(&self, x: &Array1<f64>) -> f64 {
        sum_value(&self.components, x)
    }

    pub fn full_gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        sum_gradient(&self.components, x)
    }

    pub fn objective(&self, x: &Array1<f64>) -> f64 {
        let g = self.reg.eval(x);
        if g.is_finite() {
            self.full_value(x) + g
        } else {
            f64::INFINITY
        }
    }

    /// Batch view of the same objective. The summed oracle carries
    /// `sum_t L_t`, which is the valid Lipschitz bound for the full gradient
    /// (the incremental window intentionally uses `max_t L_t` instead).
    pub fn as_composite(&self) -> CompositeProblem {
        CompositeProblem::new(sum_oracles(self.components.clone()), self.reg.clone())
    }
}

fn sum_value(components: &[SmoothOracle], x: &Array1<f64>) -> f64 {
    let mut v = components[0].value(x);
    for c in &components[1..] {
        v += c.value(x);
    }
    v
}

fn sum_gradient(components: &[SmoothOracle], x: &Array1<f64>) -> Array1<f64> {
    let mut g = components[0].grad(x);
    for c in &components[1..] {
        g += &c.grad(x);
    }
    g
}

/// Single oracle representing the sum of `components`; L is the sum of the
/// component constants.
pub fn sum_oracles(components: Vec<SmoothOracle>) -> SmoothOracle {
    let dim = components[0].dim();
    let l: f64 = components.iter().map(|c| c.lipschitz()).sum();
    let shared = Arc::new(components);
    let for_value = Arc::clone(&shared);
    let for_grad = Arc::clone(&shared);
    SmoothOracle::new(
        dim,
        l,
        Arc::new(move |x| sum_value(&for_value, x)),
        Arc::new(move |x| sum_gradient(&for_grad, x)),
    )
    .expect("sum oracle construction")
}

/// Group components into contiguous blocks of `minibatch`; a block of one is
/// the component itself.
fn make_blocks(problem: &DecomposableProblem, minibatch: usize) -> Result<Vec<SmoothOracle>> {
    if minibatch == 0 {
        return Err(NipsError::Config("minibatch must be at least 1".into()));
    }
    if minibatch == 1 {
        return Ok(problem.components.to_vec());
    }
    Ok(problem
        .components
        .chunks(minibatch)
        .map(|chunk| {
            if chunk.len() == 1 {
                chunk[0].clone()
            } else {
                sum_oracles(chunk.to_vec())
            }
        })
        .collect())
}

/// One minor update `O(x - eta grad f_t(x))`.
pub fn minor_step(
    f_t: &SmoothOracle,
    reg: &ProxRegularizer,
    x: &Array1<f64>,
    eta: f64,
    variant: OperatorVariant,
) -> Result<Array1<f64>> {
    if !(eta > 0.0) {
        return Err(NipsError::InvalidInput(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let step = x - &(eta * &f_t.grad(x));
    match variant {
        OperatorVariant::MajorOnly => Ok(step),
        OperatorVariant::MinorProx => prox_apply(reg, &step, eta),
    }
}

/// Data collected during one major iteration for the bound checks.
#[derive(Debug, Clone)]
pub struct MajorAudit {
    /// `||grad f_j(x_k) + s_j||` in processing order, with `s_j` the canonical
    /// regularizer subgradient at the minor iterate `z_j` (zero for the
    /// identity minor operator).
    pub betas: Vec<f64>,
    /// Worst excess of `||z_{t+1} - z_t||` over `2 eta ||grad f_t(z_t) + s_t||`
    /// with the subgradient recovered from the prox optimality condition.
    pub increment_excess: f64,
    pub max_grad_norm: f64,
    pub max_subgrad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct MajorOutcome {
    pub x_next: Array1<f64>,
    /// `sum_t [grad f_t(x_k) - grad f_t(z_t)]`, present when the per-block
    /// gradients at `x_k` were supplied.
    pub measured_error: Option<Array1<f64>>,
    pub audit: Option<MajorAudit>,
}

#[allow(clippy::too_many_arguments)]
fn run_major(
    blocks: &[SmoothOracle],
    reg: &ProxRegularizer,
    x: &Array1<f64>,
    eta: f64,
    variant: OperatorVariant,
    order: &[usize],
    grads_at_x: Option<&[Array1<f64>]>,
    collect_audit: bool,
) -> Result<MajorOutcome> {
    let count = order.len();
    let mut z = x.clone();
    let mut minor_sum: Option<Array1<f64>> = None;
    let mut betas = Vec::new();
    let mut increment_excess = f64::NEG_INFINITY;
    let mut max_subgrad_norm = 0.0f64;

    for (pos, &b) in order.iter().enumerate() {
        let grad_z = blocks[b].grad(&z);
        if collect_audit {
            let s = match variant {
                OperatorVariant::MajorOnly => Array1::zeros(z.len()),
                OperatorVariant::MinorProx => reg.subgradient(&z).ok_or_else(|| {
                    NipsError::Config(
                        "auditing minor prox steps needs a subgradient-capable regularizer".into(),
                    )
                })?,
            };
            max_subgrad_norm = max_subgrad_norm.max(norm2(&s));
            if let Some(gx) = grads_at_x {
                betas.push(norm2(&(&gx[b] + &s)));
            }
        }
        match minor_sum {
            None => minor_sum = Some(grad_z.clone()),
            Some(ref mut acc) => *acc += &grad_z,
        }
        if pos + 1 < count {
            let shifted = &z - &(eta * &grad_z);
            let z_next = match variant {
                OperatorVariant::MajorOnly => shifted,
                OperatorVariant::MinorProx => prox_apply(reg, &shifted, eta)?,
            };
            if collect_audit {
                // increment bound audited with the subgradient recovered
                // from prox optimality: s = (z - z_next)/eta - grad
                let delta = norm2(&(&z_next - &z));
                let combined = match variant {
                    OperatorVariant::MajorOnly => norm2(&grad_z),
                    OperatorVariant::MinorProx => {
                        let s_rec = (&z - &z_next).mapv(|v| v / eta) - &grad_z;
                        norm2(&(&grad_z + &s_rec))
                    }
                };
                increment_excess = increment_excess.max(delta - 2.0 * eta * combined);
            }
            z = z_next;
        }
    }

    let minor_sum = minor_sum.expect("at least one block");
    let shifted = x - &(eta * &minor_sum);
    let x_next = prox_apply(reg, &shifted, eta)?;

    let measured_error = grads_at_x.map(|gx| {
        let mut full = gx[order[0]].clone();
        for &b in &order[1..] {
            full += &gx[b];
        }
        full - &minor_sum
    });
    let audit = collect_audit.then(|| MajorAudit {
        betas,
        increment_excess: if increment_excess == f64::NEG_INFINITY {
            0.0
        } else {
            increment_excess
        },
        max_grad_norm: grads_at_x
            .map(|gx| gx.iter().map(norm2).fold(0.0, f64::max))
            .unwrap_or(0.0),
        max_subgrad_norm,
    });
    Ok(MajorOutcome {
        x_next,
        measured_error,
        audit,
    })
}

/// One major iteration on `problem` at iteration index `k`, measuring the
/// incrementality error (this costs one extra full-gradient pass). Returns
/// the next iterate and the measured error vector.
pub fn major_step(
    problem: &DecomposableProblem,
    x: &Array1<f64>,
    eta: f64,
    config: &IncrementalConfig,
    k: usize,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let blocks = make_blocks(problem, config.minibatch)?;
    let grads: Vec<Array1<f64>> = blocks.iter().map(|b| b.grad(x)).collect();
    let order = config.ordering.permutation(blocks.len(), k);
    let out = run_major(
        &blocks,
        &problem.reg,
        x,
        eta,
        config.variant,
        &order,
        Some(&grads),
        false,
    )?;
    Ok((out.x_next, out.measured_error.expect("grads supplied")))
}

/// Summed a-priori bound on the incrementality error:
/// `sum_{t=2..T} 2 eta L sum_{j<t} (1 + 2 eta L)^(t-1-j) beta_j`.
/// `betas[j-1]` must hold `||grad f_j(x) + s_j||`; entries past `T-1` are
/// ignored.
pub fn incrementality_error_bound(
    t_count: usize,
    eta: f64,
    l: f64,
    betas: &[f64],
) -> Result<f64> {
    if t_count <= 1 {
        return Ok(0.0);
    }
    if betas.len() < t_count - 1 {
        return Err(NipsError::InvalidInput(format!(
            "need {} betas, got {}",
            t_count - 1,
            betas.len()
        )));
    }
    let rate = 1.0 + 2.0 * eta * l;
    let mut total = 0.0;
    for t in 2..=t_count {
        let mut inner = 0.0;
        for (j, &beta) in betas.iter().enumerate().take(t - 1) {
            inner += rate.powi((t - 2 - j) as i32) * beta;
        }
        total += 2.0 * eta * l * inner;
    }
    Ok(total)
}

/// Worst-case error constant `K1 = (1 + 2 eta L)^(T-1) (T-1) (M + G)` for
/// gradient norms bounded by `M` and subgradient norms bounded by `G`.
pub fn error_bound_k1(t_count: usize, eta: f64, l: f64, m: f64, g: f64) -> f64 {
    if t_count <= 1 {
        return 0.0;
    }
    (1.0 + 2.0 * eta * l).powi((t_count - 1) as i32) * (t_count - 1) as f64 * (m + g)
}

/// Incremental drive loop with a per-record observer; see
/// [`solve_incremental`].
pub fn solve_incremental_with<F>(
    problem: &DecomposableProblem,
    x0: &Array1<f64>,
    config: &IncrementalConfig,
    mut observer: F,
) -> Result<SolveResult>
where
    F: FnMut(&TraceRecord),
{
    config.base.validate()?;
    if !matches!(config.base.error_model.kind, ErrorKind::None) {
        return Err(NipsError::Config(
            "incremental runs do not inject errors; the incrementality error is the error model"
                .into(),
        ));
    }
    ensure_finite("x0", x0)?;
    if !problem.objective(x0).is_finite() {
        return Err(NipsError::InvalidInput(
            "x0 is infeasible: objective is not finite".into(),
        ));
    }

    let blocks = make_blocks(problem, config.minibatch)?;
    let block_count = blocks.len();
    let l_static = blocks.iter().map(|b| b.lipschitz()).fold(0.0, f64::max);
    let audit = config.base.audit_inequalities;

    let start = Instant::now();
    let mut x = x0.clone();
    let mut trace = Vec::new();
    let mut best_x = x.clone();
    let mut best_phi = f64::INFINITY;
    let mut iterations = 0;
    // running suprema over the trajectory for the K1 constant
    let mut m_running = 0.0f64;
    let mut g_running = 0.0f64;

    let mut k = 0usize;
    let (status, final_record) = loop {
        let l = match &problem.tracker {
            Some(t) => t.current().max(l_static),
            None => l_static,
        };
        let eta = stepsize_for(l, config.base.c, k, &config.base.eta)?;
        let grads_at_x: Vec<Array1<f64>> = blocks.iter().map(|b| b.grad(&x)).collect();
        let mut full_grad = grads_at_x[0].clone();
        for g in &grads_at_x[1..] {
            full_grad += g;
        }
        let rho_p = prox_apply(&problem.reg, &(&x - &full_grad), 1.0)?;
        let rho_norm = norm2(&(&x - &rho_p));
        let phi = problem.objective(&x);
        if phi < best_phi {
            best_phi = phi;
            best_x = x.clone();
        }

        let terminal = |start: &Instant| TraceRecord {
            k,
            eta,
            phi,
            rho_norm,
            err_norm: 0.0,
            step_norm: 0.0,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        if rho_norm <= config.base.residual_tol {
            break (SolveStatus::Converged, terminal(&start));
        }
        if k >= config.base.max_outer_iters {
            break (SolveStatus::MaxIters, terminal(&start));
        }

        let order = config.ordering.permutation(block_count, k);
        let out = run_major(
            &blocks,
            &problem.reg,
            &x,
            eta,
            config.variant,
            &order,
            Some(&grads_at_x),
            audit,
        )?;
        let e = out.measured_error.as_ref().expect("grads supplied");
        let err_norm = norm2(e);
        let step_norm = norm2(&(&out.x_next - &x));
        iterations += 1;

        let mut audit_failed = None;
        if audit {
            let info = out.audit.as_ref().expect("audit collected");
            m_running = m_running.max(info.max_grad_norm);
            g_running = g_running.max(info.max_subgrad_norm);
            let bound = incrementality_error_bound(block_count, eta, l, &info.betas)?;
            let k1 = error_bound_k1(block_count, eta, l, m_running, g_running);
            let slack = 1e-9 * (1.0 + bound);
            if info.increment_excess > 1e-9 {
                audit_failed = Some(AuditFailure {
                    k,
                    detail: format!(
                        "minor increment exceeded its bound by {:.3e}",
                        info.increment_excess
                    ),
                });
            } else if err_norm > bound + slack {
                audit_failed = Some(AuditFailure {
                    k,
                    detail: format!(
                        "measured error {err_norm:.6e} exceeds summed bound {bound:.6e}"
                    ),
                });
            } else if bound > k1 + 1e-9 * (1.0 + k1) {
                audit_failed = Some(AuditFailure {
                    k,
                    detail: format!("summed bound {bound:.6e} exceeds K1 {k1:.6e}"),
                });
            }
        }

        if k.is_multiple_of(config.base.trace_every) || audit_failed.is_some() {
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
                x: out.x_next,
                trace,
                status: SolveStatus::AuditViolation(failure),
                best_x,
                best_phi,
                iterations,
            });
        }
        x = out.x_next;
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

/// Outer loop of major iterations with residual-based stopping on the full
/// problem. The trace's `err_norm` column records the measured incrementality
/// error `||e(x_k)||` at every iteration.
pub fn solve_incremental(
    problem: &DecomposableProblem,
    x0: &Array1<f64>,
    config: &IncrementalConfig,
) -> Result<SolveResult> {
    solve_incremental_with(problem, x0, config, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::{solve_batch, EtaSchedule};
    use crate::problems;
    use ndarray::arr1;

    fn base_config(c: f64) -> SolverConfig {
        SolverConfig::new(c).with_max_iters(200).with_tol(1e-10)
    }

    #[test]
    fn minor_step_examples() {
        let f = SmoothOracle::quadratic(arr1(&[0.0]));
        let out = minor_step(
            &f,
            &ProxRegularizer::Zero,
            &arr1(&[2.0]),
            0.5,
            OperatorVariant::MajorOnly,
        )
        .unwrap();
        assert_eq!(out, arr1(&[1.0]));

        let f = SmoothOracle::quadratic(arr1(&[-1.0]));
        let out = minor_step(
            &f,
            &ProxRegularizer::NonNeg,
            &arr1(&[0.0]),
            1.0,
            OperatorVariant::MinorProx,
        )
        .unwrap();
        assert_eq!(out, arr1(&[0.0]));

        let f = SmoothOracle::quadratic(arr1(&[0.0]));
        let out = minor_step(
            &f,
            &ProxRegularizer::l1(1.0).unwrap(),
            &arr1(&[3.0]),
            1.0,
            OperatorVariant::MinorProx,
        )
        .unwrap();
        assert_eq!(out, arr1(&[0.0]));
    }

    #[test]
    fn major_step_single_component_matches_batch_step() {
        let problem = problems::quadratic_sum(&[2.0], ProxRegularizer::Zero).unwrap();
        let config = IncrementalConfig::new(base_config(0.25), OperatorVariant::MinorProx);
        let (x_next, e) = major_step(&problem, &arr1(&[0.0]), 0.5, &config, 0).unwrap();
        let batch = crate::batch::nips_step(
            &problem.as_composite(),
            &arr1(&[0.0]),
            0.5,
            &arr1(&[0.0]),
        )
        .unwrap();
        assert_eq!(x_next, batch);
        assert_eq!(e, arr1(&[0.0]));
    }

    #[test]
    fn major_step_linear_components_have_zero_error() {
        // constant gradients: any evaluation point gives the same value
        let comp = |slope: f64| {
            SmoothOracle::new(
                1,
                crate::model::LIPSCHITZ_FLOOR,
                Arc::new(move |x: &Array1<f64>| slope * x[0]),
                Arc::new(move |_: &Array1<f64>| arr1(&[slope])),
            )
            .unwrap()
        };
        let problem =
            DecomposableProblem::new(vec![comp(1.0), comp(-2.0), comp(0.5)], ProxRegularizer::Zero)
                .unwrap();
        let config = IncrementalConfig::new(base_config(0.25), OperatorVariant::MajorOnly);
        let (_, e) = major_step(&problem, &arr1(&[1.5]), 0.5, &config, 3).unwrap();
        assert_eq!(e, arr1(&[0.0]));
    }

    #[test]
    fn major_step_hand_executed_recursion() {
        // f1 = x^2/2, f2 = (x-2)^2/2, eta = 0.1, x = 0, O = identity:
        // z1 = 0, z2 = 0, sum = 0 + (-2), x_next = 0.2, e = 0
        let problem = problems::quadratic_sum(&[0.0, 2.0], ProxRegularizer::Zero).unwrap();
        let config = IncrementalConfig::new(base_config(0.05), OperatorVariant::MajorOnly);
        let (x_next, e) = major_step(&problem, &arr1(&[0.0]), 0.1, &config, 0).unwrap();
        assert!((x_next[0] - 0.2).abs() < 1e-15);
        assert_eq!(e, arr1(&[0.0]));
    }

    #[test]
    fn t1_trace_is_bitwise_equal_to_batch() {
        let problem = problems::quadratic_sum(&[3.0], ProxRegularizer::l1(0.5).unwrap()).unwrap();
        let config = SolverConfig::new(0.25)
            .with_max_iters(60)
            .with_tol(1e-9)
            .with_audit(false);
        let inc = solve_incremental(
            &problem,
            &arr1(&[0.0]),
            &IncrementalConfig::new(config.clone(), OperatorVariant::MinorProx),
        )
        .unwrap();
        let bat = solve_batch(&problem.as_composite(), &arr1(&[0.0]), &config).unwrap();
        assert_eq!(inc.trace.len(), bat.trace.len());
        for (a, b) in inc.trace.iter().zip(bat.trace.iter()) {
            assert!(a.same_math(b), "k={} differs", a.k);
        }
        assert_eq!(inc.status, bat.status);
        assert_eq!(inc.x, bat.x);
    }

    #[test]
    fn minibatch_covering_everything_reduces_to_batch() {
        let problem =
            problems::quadratic_sum(&[1.0, 2.0, 3.0, 4.0], ProxRegularizer::NonNeg).unwrap();
        let config = SolverConfig::new(0.2).with_max_iters(80).with_tol(1e-9);
        let inc = solve_incremental(
            &problem,
            &arr1(&[0.5]),
            &IncrementalConfig::new(config.clone(), OperatorVariant::MinorProx).with_minibatch(4),
        )
        .unwrap();
        let bat = solve_batch(&problem.as_composite(), &arr1(&[0.5]), &config).unwrap();
        assert_eq!(inc.trace.len(), bat.trace.len());
        for (a, b) in inc.trace.iter().zip(bat.trace.iter()) {
            assert!(a.same_math(b), "k={} differs", a.k);
        }
    }

    #[test]
    fn quadratic_sum_converges_to_mean() {
        let problem =
            problems::quadratic_sum(&[1.0, 2.0, 3.0, 4.0, 5.0], ProxRegularizer::Zero).unwrap();
        // small constant eta keeps the incrementality bias below the target
        let config = SolverConfig::new(5e-6)
            .with_eta(EtaSchedule::Constant(5e-6))
            .with_max_iters(3_000_000)
            .with_tol(1e-4);
        let out = solve_incremental(
            &problem,
            &arr1(&[0.0]),
            &IncrementalConfig::new(config, OperatorVariant::MajorOnly),
        )
        .unwrap();
        assert_eq!(out.status, SolveStatus::Converged);
        assert!((out.x[0] - 3.0).abs() < 1e-4, "{}", out.x[0]);
    }

    #[test]
    fn variants_agree_when_regularizer_is_zero() {
        let problem = problems::quadratic_sum(&[1.0, 4.0], ProxRegularizer::Zero).unwrap();
        let mk = |variant| {
            let config = SolverConfig::new(0.05)
                .with_eta(EtaSchedule::Constant(0.1))
                .with_max_iters(40)
                .with_tol(0.0);
            solve_incremental(
                &problem,
                &arr1(&[0.0]),
                &IncrementalConfig::new(config, variant),
            )
            .unwrap()
        };
        let a = mk(OperatorVariant::MajorOnly);
        let b = mk(OperatorVariant::MinorProx);
        assert_eq!(a.x, b.x);
        for (ra, rb) in a.trace.iter().zip(b.trace.iter()) {
            assert!(ra.same_math(rb));
        }
    }

    #[test]
    fn bound_formula_examples() {
        assert_eq!(incrementality_error_bound(1, 0.1, 1.0, &[]).unwrap(), 0.0);
        assert_eq!(
            incrementality_error_bound(3, 0.1, 0.0, &[1.0, 1.0]).unwrap(),
            0.0
        );
        let v = incrementality_error_bound(3, 0.1, 1.0, &[1.0, 1.0]).unwrap();
        assert!((v - 0.64).abs() < 1e-12, "{v}");

        assert_eq!(error_bound_k1(1, 0.1, 1.0, 5.0, 5.0), 0.0);
        let k1 = error_bound_k1(3, 0.1, 1.0, 1.0, 0.0);
        assert!((k1 - 2.88).abs() < 1e-12);
        // linear in M + G
        assert_eq!(
            2.0 * error_bound_k1(4, 0.2, 1.5, 0.0, 1.0),
            error_bound_k1(4, 0.2, 1.5, 0.0, 2.0)
        );
    }

    #[test]
    fn audited_run_stays_within_bounds() {
        let problem =
            problems::quadratic_sum(&[1.0, 2.0, 3.0, 4.0, 5.0], ProxRegularizer::l1(0.5).unwrap())
                .unwrap();
        for variant in [OperatorVariant::MajorOnly, OperatorVariant::MinorProx] {
            let config = SolverConfig::new(0.05)
                .with_eta(EtaSchedule::Constant(0.1))
                .with_max_iters(150)
                .with_tol(0.0)
                .with_audit(true);
            let out = solve_incremental(
                &problem,
                &arr1(&[0.0]),
                &IncrementalConfig::new(config, variant),
            )
            .unwrap();
            assert_eq!(out.status, SolveStatus::MaxIters, "{variant:?}");
        }
    }

    #[test]
    fn shuffled_ordering_is_deterministic() {
        let problem =
            problems::quadratic_sum(&[1.0, 2.0, 3.0], ProxRegularizer::Zero).unwrap();
        let mk = || {
            let config = SolverConfig::new(0.05)
                .with_eta(EtaSchedule::Constant(0.1))
                .with_max_iters(30)
                .with_tol(0.0);
            solve_incremental(
                &problem,
                &arr1(&[0.0]),
                &IncrementalConfig::new(config, OperatorVariant::MinorProx)
                    .with_ordering(Ordering::Shuffled { seed: 9 }),
            )
            .unwrap()
        };
        let a = mk();
        let b = mk();
        for (ra, rb) in a.trace.iter().zip(b.trace.iter()) {
            assert!(ra.same_math(rb));
        }
    }

    #[test]
    fn injected_error_models_are_rejected() {
        let problem = problems::quadratic_sum(&[1.0], ProxRegularizer::Zero).unwrap();
        let config = SolverConfig::new(0.25)
            .with_error_model(crate::batch::ErrorModel::gaussian(1.0, 0.1, 1));
        assert!(matches!(
            solve_incremental(
                &problem,
                &arr1(&[0.0]),
                &IncrementalConfig::new(config, OperatorVariant::MinorProx),
            ),
            Err(NipsError::Config(_))
        ));
    }
}
