//! Problem abstraction shared by all solvers: a smooth oracle paired with a
//! prox-capable regularizer, the proximal-residual stationarity measure, and
//! gradient/Lipschitz utilities.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use ndarray::Array1;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NipsError, Result};
use crate::prox::{ensure_finite, norm2, prox_apply, ProxRegularizer};

pub type ScalarFieldFn = Arc<dyn Fn(&Array1<f64>) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&Array1<f64>) -> Array1<f64> + Send + Sync>;

/// Smallest Lipschitz constant the crate will work with; degenerate oracles
/// (constant gradients) are clamped up to this.
pub const LIPSCHITZ_FLOOR: f64 = 1e-12;

/// A continuously differentiable function exposed through value and gradient
/// handles plus a Lipschitz estimate for the gradient. Handles must be safe to
/// query concurrently.
#[derive(Clone)]
pub struct SmoothOracle {
    dim: usize,
    lipschitz: f64,
    value: ScalarFieldFn,
    grad: GradientFn,
}

impl fmt::Debug for SmoothOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothOracle")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl SmoothOracle {
    pub fn new(dim: usize, lipschitz: f64, value: ScalarFieldFn, grad: GradientFn) -> Result<Self> {
        if dim == 0 {
            return Err(NipsError::InvalidInput("dimension must be positive".into()));
        }
        if !lipschitz.is_finite() || lipschitz < 0.0 {
            return Err(NipsError::InvalidInput(format!(
                "Lipschitz constant must be finite and nonnegative, got {lipschitz}"
            )));
        }
        Ok(Self {
            dim,
            lipschitz: lipschitz.max(LIPSCHITZ_FLOOR),
            value,
            grad,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn value(&self, x: &Array1<f64>) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: &Array1<f64>) -> Array1<f64> {
        (self.grad)(x)
    }

    /// `1/2 ||x - center||^2`; L = 1.
    pub fn quadratic(center: Array1<f64>) -> Self {
        let c = center.clone();
        let c2 = center;
        Self {
            dim: c.len(),
            lipschitz: 1.0,
            value: Arc::new(move |x| 0.5 * norm2(&(x - &c)).powi(2)),
            grad: Arc::new(move |x| x - &c2),
        }
    }

    /// `1/2 (x - center)^T diag(q) (x - center)`; L = max q.
    pub fn scaled_quadratic(q: Array1<f64>, center: Array1<f64>) -> Self {
        let l = q.iter().fold(0.0f64, |m, &v| m.max(v)).max(LIPSCHITZ_FLOOR);
        let (q1, c1) = (q.clone(), center.clone());
        let (q2, c2) = (q, center);
        Self {
            dim: c1.len(),
            lipschitz: l,
            value: Arc::new(move |x| {
                x.iter()
                    .zip(c1.iter())
                    .zip(q1.iter())
                    .map(|((&xi, &ci), &qi)| 0.5 * qi * (xi - ci) * (xi - ci))
                    .sum()
            }),
            grad: Arc::new(move |x| {
                Array1::from_iter(
                    x.iter()
                        .zip(c2.iter())
                        .zip(q2.iter())
                        .map(|((&xi, &ci), &qi)| qi * (xi - ci)),
                )
            }),
        }
    }
}

/// Running maximum used to refresh Lipschitz estimates mid-solve; oracles
/// observe local curvature and solvers pick up the tightened constant each
/// outer iteration.
#[derive(Debug)]
pub struct LipschitzTracker {
    bits: AtomicU64,
}

impl LipschitzTracker {
    pub fn new(initial: f64) -> Self {
        Self {
            bits: AtomicU64::new(initial.max(LIPSCHITZ_FLOOR).to_bits()),
        }
    }

    /// Raise the tracked constant to at least `candidate`.
    pub fn observe(&self, candidate: f64) {
        if !candidate.is_finite() {
            return;
        }
        let mut cur = self.bits.load(Ordering::Relaxed);
        // nonnegative f64 bit patterns order like the floats themselves
        while f64::from_bits(cur) < candidate {
            match self.bits.compare_exchange_weak(
                cur,
                candidate.to_bits(),
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => break,
                Err(seen) => cur = seen,
            }
        }
    }

    pub fn current(&self) -> f64 {
        f64::from_bits(self.bits.load(Ordering::Relaxed))
    }
}

/// A smooth oracle paired with a prox regularizer; the object every solver
/// consumes. `objective` is `f(x) + g(x)` and evaluates to `+inf` outside the
/// regularizer's feasible set.
#[derive(Clone)]
pub struct CompositeProblem {
    pub smooth: SmoothOracle,
    pub reg: ProxRegularizer,
    tracker: Option<Arc<LipschitzTracker>>,
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("smooth", &self.smooth)
            .field("reg", &self.reg)
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(smooth: SmoothOracle, reg: ProxRegularizer) -> Self {
        Self {
            smooth,
            reg,
            tracker: None,
        }
    }

    /// Attach a tracker whose running maximum supersedes the static estimate.
    pub fn with_lipschitz_tracker(mut self, tracker: Arc<LipschitzTracker>) -> Self {
        self.tracker = Some(tracker);
        self
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    /// Best Lipschitz knowledge right now.
    pub fn current_lipschitz(&self) -> f64 {
        match &self.tracker {
            Some(t) => t.current().max(self.smooth.lipschitz()),
            None => self.smooth.lipschitz(),
        }
    }

    pub fn objective(&self, x: &Array1<f64>) -> f64 {
        let g = self.reg.eval(x);
        if g.is_finite() {
            self.smooth.value(x) + g
        } else {
            f64::INFINITY
        }
    }

    /// Proximal residual `rho(x) = x - prox_1(x - grad f(x))` with unit
    /// stepsize; zero exactly at stationary points.
    pub fn residual(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        let grad = self.smooth.grad(x);
        self.residual_with_grad(x, &grad)
    }

    /// Residual when the gradient at `x` is already available.
    pub fn residual_with_grad(&self, x: &Array1<f64>, grad: &Array1<f64>) -> Result<Array1<f64>> {
        let p = prox_apply(&self.reg, &(x - grad), 1.0)?;
        Ok(x - &p)
    }

    pub fn residual_norm(&self, x: &Array1<f64>) -> Result<f64> {
        Ok(norm2(&self.residual(x)?))
    }

    /// True iff `||rho(x)|| <= eps` (inclusive).
    pub fn is_eps_stationary(&self, x: &Array1<f64>, eps: f64) -> Result<bool> {
        if !(eps >= 0.0) {
            return Err(NipsError::InvalidInput(format!(
                "eps must be nonnegative, got {eps}"
            )));
        }
        Ok(self.residual_norm(x)? <= eps)
    }
}

/// Central-difference gradient estimate, one coordinate at a time.
pub fn finite_diff_grad(oracle: &SmoothOracle, x: &Array1<f64>, h: f64) -> Result<Array1<f64>> {
    if !(h > 0.0) {
        return Err(NipsError::InvalidInput(format!(
            "step must be positive, got {h}"
        )));
    }
    ensure_finite("input", x)?;
    let mut grad = Array1::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = oracle.value(&probe);
        probe[i] = x[i] - h;
        let minus = oracle.value(&probe);
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Sampled Lipschitz estimate: maximum gradient-difference ratio over all
/// pairs of `samples` points drawn in the ball, inflated by a 1.1 safety
/// factor and floored at [`LIPSCHITZ_FLOOR`]. Deterministic given the seed.
pub fn estimate_lipschitz(
    oracle: &SmoothOracle,
    region_center: &Array1<f64>,
    region_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(region_radius > 0.0) {
        return Err(NipsError::InvalidInput(format!(
            "region radius must be positive, got {region_radius}"
        )));
    }
    if samples < 2 {
        return Err(NipsError::InvalidInput(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = region_center.len();
    let points: Vec<Array1<f64>> = (0..samples)
        .map(|_| {
            let offset =
                Array1::from_iter((0..n).map(|_| rng.random_range(-region_radius..region_radius)));
            region_center + &offset
        })
        .collect();
    let grads: Vec<Array1<f64>> = points.iter().map(|p| oracle.grad(p)).collect();
    let mut ratio_max = 0.0f64;
    for i in 0..samples {
        for j in i + 1..samples {
            let dx = norm2(&(&points[i] - &points[j]));
            if dx > 0.0 {
                ratio_max = ratio_max.max(norm2(&(&grads[i] - &grads[j])) / dx);
            }
        }
    }
    Ok((1.1 * ratio_max).max(LIPSCHITZ_FLOOR))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    #[test]
    fn residual_examples() {
        // f = 1/2 ||x - a||^2, g = 0: rho(a) = 0
        let a = arr1(&[2.0, -1.0]);
        let p = CompositeProblem::new(SmoothOracle::quadratic(a.clone()), ProxRegularizer::Zero);
        assert_eq!(p.residual_norm(&a).unwrap(), 0.0);

        // f = 1/2 (x+1)^2, g = nonneg indicator, x = 0: constrained KKT point
        let p = CompositeProblem::new(
            SmoothOracle::quadratic(arr1(&[-1.0])),
            ProxRegularizer::NonNeg,
        );
        assert_eq!(p.residual_norm(&arr1(&[0.0])).unwrap(), 0.0);

        // f = 1/2 ||x||^2, g = 0, x = [3,4]: rho = x, norm 5
        let p = CompositeProblem::new(
            SmoothOracle::quadratic(arr1(&[0.0, 0.0])),
            ProxRegularizer::Zero,
        );
        let rho = p.residual(&arr1(&[3.0, 4.0])).unwrap();
        assert_eq!(rho, arr1(&[3.0, 4.0]));
        assert_eq!(norm2(&rho), 5.0);
    }

    #[test]
    fn eps_stationary_boundaries() {
        let p = CompositeProblem::new(
            SmoothOracle::quadratic(arr1(&[0.0, 0.0])),
            ProxRegularizer::Zero,
        );
        let origin = arr1(&[0.0, 0.0]);
        assert!(p.is_eps_stationary(&origin, 0.0).unwrap());
        let x = arr1(&[3.0, 4.0]);
        assert!(!p.is_eps_stationary(&x, 1.0).unwrap());
        assert!(p.is_eps_stationary(&x, 5.0).unwrap()); // boundary inclusive
        assert!(p.is_eps_stationary(&x, 6.0).unwrap()); // monotone in eps
        assert!(p.is_eps_stationary(&x, -0.1).is_err());
    }

    #[test]
    fn box_kkt_point_has_zero_residual() {
        // minimize 1/2 ||x - a||^2 over the box [0,1]^2 with a outside;
        // the clamped point is stationary.
        let a = arr1(&[2.0, -3.0]);
        let reg =
            ProxRegularizer::box_constraint(arr1(&[0.0, 0.0]), arr1(&[1.0, 1.0])).unwrap();
        let p = CompositeProblem::new(SmoothOracle::quadratic(a), reg);
        let kkt = arr1(&[1.0, 0.0]);
        assert!(p.residual_norm(&kkt).unwrap() <= 1e-8);
    }

    #[test]
    fn finite_diff_examples() {
        let oracle = SmoothOracle::quadratic(arr1(&[0.0, 0.0]));
        let g = finite_diff_grad(&oracle, &arr1(&[1.0, 2.0]), 1e-6).unwrap();
        assert!((g[0] - 1.0).abs() <= 1e-6 && (g[1] - 2.0).abs() <= 1e-6);

        let constant = SmoothOracle::new(
            2,
            LIPSCHITZ_FLOOR,
            Arc::new(|_| 7.5),
            Arc::new(|x: &Array1<f64>| Array1::zeros(x.len())),
        )
        .unwrap();
        let g = finite_diff_grad(&constant, &arr1(&[4.0, -2.0]), 1e-6).unwrap();
        assert!(norm2(&g) <= 1e-9);

        // f(x) = x1 * x2 is bilinear; central differences are exact
        let bilinear = SmoothOracle::new(
            2,
            1.0,
            Arc::new(|x: &Array1<f64>| x[0] * x[1]),
            Arc::new(|x: &Array1<f64>| arr1(&[x[1], x[0]])),
        )
        .unwrap();
        let g = finite_diff_grad(&bilinear, &arr1(&[2.0, 3.0]), 1e-6).unwrap();
        assert!((g[0] - 3.0).abs() <= 1e-8 && (g[1] - 2.0).abs() <= 1e-8);
    }

    #[test]
    fn lipschitz_estimate_identity_quadratic() {
        let oracle = SmoothOracle::quadratic(arr1(&[0.0, 0.0]));
        let l = estimate_lipschitz(&oracle, &arr1(&[0.0, 0.0]), 1.0, 50, 7).unwrap();
        // ratio is exactly 1 for every pair
        assert!((l - 1.1).abs() <= 1e-12);
    }

    #[test]
    fn lipschitz_estimate_linear_clamps_to_floor() {
        let linear = SmoothOracle::new(
            2,
            1.0,
            Arc::new(|x: &Array1<f64>| x[0] + 2.0 * x[1]),
            Arc::new(|_: &Array1<f64>| arr1(&[1.0, 2.0])),
        )
        .unwrap();
        let l = estimate_lipschitz(&linear, &arr1(&[0.0, 0.0]), 1.0, 20, 3).unwrap();
        assert_eq!(l, LIPSCHITZ_FLOOR);
    }

    #[test]
    fn lipschitz_estimate_diagonal_quadratic() {
        let oracle =
            SmoothOracle::scaled_quadratic(arr1(&[1.0, 4.0]), arr1(&[0.0, 0.0]));
        let l = estimate_lipschitz(&oracle, &arr1(&[0.0, 0.0]), 1.0, 120, 11).unwrap();
        // supremum ratio is 4; sampled value approaches it from below
        assert!(l <= 4.4 + 1e-12, "{l}");
        assert!(l >= 4.2, "{l}");
    }

    #[test]
    fn lipschitz_estimate_rejects_degenerate_region() {
        let oracle = SmoothOracle::quadratic(arr1(&[0.0]));
        assert!(estimate_lipschitz(&oracle, &arr1(&[0.0]), 0.0, 10, 1).is_err());
        assert!(estimate_lipschitz(&oracle, &arr1(&[0.0]), 1.0, 1, 1).is_err());
    }

    #[test]
    fn oracle_gradient_matches_finite_differences() {
        let oracle = SmoothOracle::scaled_quadratic(arr1(&[2.0, 0.5]), arr1(&[1.0, -1.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let x = Array1::from_iter((0..2).map(|_| rng.random_range(-3.0..3.0)));
            let h = 1e-6 * (1.0 + norm2(&x));
            let fd = finite_diff_grad(&oracle, &x, h).unwrap();
            let an = oracle.grad(&x);
            let rel = norm2(&(&fd - &an)) / (1.0 + norm2(&an));
            assert!(rel <= 1e-5, "rel err {rel}");
        }
    }

    #[test]
    fn sampled_ratios_stay_under_declared_lipschitz() {
        // the declared constant must dominate sampled gradient-difference
        // ratios with a 5% margin
        let oracles = [
            SmoothOracle::quadratic(arr1(&[0.5, -2.0])),
            SmoothOracle::scaled_quadratic(arr1(&[1.0, 4.0]), arr1(&[0.0, 1.0])),
            crate::problems::quartic_1d().smooth,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for oracle in &oracles {
            let n = oracle.dim();
            let radius = if n == 1 { 2.0 } else { 3.0 };
            for _ in 0..200 {
                let x = Array1::from_iter((0..n).map(|_| rng.random_range(-radius..radius)));
                let y = Array1::from_iter((0..n).map(|_| rng.random_range(-radius..radius)));
                let dx = norm2(&(&x - &y));
                if dx == 0.0 {
                    continue;
                }
                let ratio = norm2(&(&oracle.grad(&x) - &oracle.grad(&y))) / dx;
                assert!(
                    ratio <= 1.05 * oracle.lipschitz(),
                    "ratio {ratio} exceeds 1.05 * {}",
                    oracle.lipschitz()
                );
            }
        }
    }

    #[test]
    fn tracker_monotone_and_concurrent_safe() {
        let t = LipschitzTracker::new(1.0);
        t.observe(0.5);
        assert_eq!(t.current(), 1.0);
        t.observe(3.0);
        assert_eq!(t.current(), 3.0);
        t.observe(f64::NAN);
        assert_eq!(t.current(), 3.0);
    }

    #[test]
    fn objective_infinite_outside_feasible_set() {
        let p = CompositeProblem::new(
            SmoothOracle::quadratic(arr1(&[1.0])),
            ProxRegularizer::NonNeg,
        );
        assert!(p.objective(&arr1(&[-0.5])).is_infinite());
        assert_eq!(p.objective(&arr1(&[1.0])), 0.0);
    }
}
