//! Proximity operators and projections.
//!
//! Every operator here realizes the variational definition
//! `prox_eta(y) = argmin_x g(x) + ||x - y||^2 / (2 eta)` for a convex,
//! lower semi-continuous `g`. Closed forms are used where they are exact;
//! the box-plus-hyperplane family is solved by bisection on the hyperplane
//! multiplier, and general separable-plus-set regularizers go through
//! Dykstra splitting.

use std::fmt;
use std::sync::Arc;

use ndarray::Array1;

use crate::error::{NipsError, Result};

/// Elementwise prox handle: `(coordinate, shifted input, eta) -> minimizer`.
/// The handle must solve the full 1-D prox of its coordinate's penalty,
/// including any box clamp.
pub type ScalarProxFn = Arc<dyn Fn(usize, f64, f64) -> f64 + Send + Sync>;

/// Full-vector prox handle: `(input, eta) -> minimizer`.
pub type VectorProxFn = Arc<dyn Fn(&Array1<f64>, f64) -> Array1<f64> + Send + Sync>;

/// Euclidean projection handle.
pub type ProjectionFn = Arc<dyn Fn(&Array1<f64>) -> Array1<f64> + Send + Sync>;

/// Function-value handle; may return `f64::INFINITY` for infeasible points.
pub type ValueFn = Arc<dyn Fn(&Array1<f64>) -> f64 + Send + Sync>;

/// Set-membership test.
pub type MemberFn = Arc<dyn Fn(&Array1<f64>) -> bool + Send + Sync>;

/// Default sweep budget for Dykstra splitting.
pub const DYKSTRA_MAX_ITER: usize = 1000;
/// Default convergence tolerance for Dykstra splitting (change between sweeps).
pub const DYKSTRA_TOL: f64 = 1e-9;

// Composed invariants (nonexpansivity within 1e-9) need the internal Dykstra
// dispatch to resolve tighter than the checks it feeds.
const DISPATCH_DYKSTRA_TOL: f64 = 1e-12;

/// A convex, lsc regularizer exposed through its proximity map, its value,
/// and (where available) a canonical subgradient of its finite part.
#[derive(Clone)]
pub enum ProxRegularizer {
    /// g = 0; the prox is the identity.
    Zero,
    /// g = weight * ||x||_1.
    L1 { weight: f64 },
    /// Indicator of the nonnegative orthant.
    NonNeg,
    /// Indicator of the box [lower, upper].
    Box {
        lower: Array1<f64>,
        upper: Array1<f64>,
    },
    /// Indicator of `{ l <= x <= u, a^T x = b }`.
    BoxHyperplane {
        lower: Array1<f64>,
        upper: Array1<f64>,
        normal: Array1<f64>,
        offset: f64,
    },
    /// g = weight * ||x||_1 + indicator of the nonnegative orthant.
    /// The prox composes shrinkage with the projection, which is exact
    /// for this pair.
    L1NonNeg { weight: f64 },
    /// Separable penalty plus a set indicator, combined through Dykstra
    /// splitting. `elementwise` is the prox of the penalty alone.
    SeparablePlusSet {
        elementwise: VectorProxFn,
        penalty_value: ValueFn,
        project: ProjectionFn,
        member: MemberFn,
    },
    /// User-supplied prox and value handles.
    Custom {
        prox: VectorProxFn,
        value: ValueFn,
        subgradient: Option<VectorProxFn>,
    },
}

impl fmt::Debug for ProxRegularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::L1 { weight } => write!(f, "L1({weight})"),
            Self::NonNeg => write!(f, "NonNeg"),
            Self::Box { .. } => write!(f, "Box"),
            Self::BoxHyperplane { .. } => write!(f, "BoxHyperplane"),
            Self::L1NonNeg { weight } => write!(f, "L1NonNeg({weight})"),
            Self::SeparablePlusSet { .. } => write!(f, "SeparablePlusSet"),
            Self::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl ProxRegularizer {
    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) {
            return Err(NipsError::InvalidInput(format!(
                "l1 weight must be nonnegative, got {weight}"
            )));
        }
        Ok(Self::L1 { weight })
    }

    pub fn l1_nonneg(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) {
            return Err(NipsError::InvalidInput(format!(
                "l1 weight must be nonnegative, got {weight}"
            )));
        }
        Ok(Self::L1NonNeg { weight })
    }

    pub fn box_constraint(lower: Array1<f64>, upper: Array1<f64>) -> Result<Self> {
        check_box(&lower, &upper)?;
        Ok(Self::Box { lower, upper })
    }

    pub fn box_hyperplane(
        lower: Array1<f64>,
        upper: Array1<f64>,
        normal: Array1<f64>,
        offset: f64,
    ) -> Result<Self> {
        check_box(&lower, &upper)?;
        if normal.len() != lower.len() {
            return Err(NipsError::DimensionMismatch {
                expected: lower.len(),
                got: normal.len(),
            });
        }
        Ok(Self::BoxHyperplane {
            lower,
            upper,
            normal,
            offset,
        })
    }

    pub fn custom(prox: VectorProxFn, value: ValueFn) -> Self {
        Self::Custom {
            prox,
            value,
            subgradient: None,
        }
    }

    /// g(x); `+inf` outside the feasible set.
    pub fn eval(&self, x: &Array1<f64>) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            Self::NonNeg => {
                if x.iter().all(|&v| v >= 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::Box { lower, upper } => {
                let inside = x
                    .iter()
                    .zip(lower.iter())
                    .zip(upper.iter())
                    .all(|((&v, &l), &u)| v >= l && v <= u);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::BoxHyperplane {
                lower,
                upper,
                normal,
                offset,
            } => {
                let in_box = x
                    .iter()
                    .zip(lower.iter())
                    .zip(upper.iter())
                    .all(|((&v, &l), &u)| v >= l && v <= u);
                // Membership uses a looser tolerance than the bisection so
                // that prox outputs always evaluate as feasible.
                let tol = 100.0 * hyperplane_tolerance(lower, upper, normal);
                if in_box && (normal.dot(x) - offset).abs() <= tol {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::L1NonNeg { weight } => {
                if x.iter().all(|&v| v >= 0.0) {
                    weight * x.sum()
                } else {
                    f64::INFINITY
                }
            }
            Self::SeparablePlusSet {
                penalty_value,
                member,
                ..
            } => {
                if member(x) {
                    penalty_value(x)
                } else {
                    f64::INFINITY
                }
            }
            Self::Custom { value, .. } => value(x),
        }
    }

    /// Canonical subgradient of the finite part, where one is available.
    /// Indicator-only kinds return the zero vector (feasible points admit 0
    /// in the normal cone); the l1 kinds return the minimal-norm choice
    /// `weight * sign(x)`.
    pub fn subgradient(&self, x: &Array1<f64>) -> Option<Array1<f64>> {
        match self {
            Self::Zero | Self::NonNeg | Self::Box { .. } | Self::BoxHyperplane { .. } => {
                Some(Array1::zeros(x.len()))
            }
            Self::L1 { weight } | Self::L1NonNeg { weight } => {
                Some(x.mapv(|v| weight * sign(v)))
            }
            Self::SeparablePlusSet { .. } => None,
            Self::Custom { subgradient, .. } => subgradient.as_ref().map(|h| h(x, 1.0)),
        }
    }

    /// The proximity map at index `eta`. See [`prox_apply`].
    pub fn prox(&self, y: &Array1<f64>, eta: f64) -> Result<Array1<f64>> {
        prox_apply(self, y, eta)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_box(lower: &Array1<f64>, upper: &Array1<f64>) -> Result<()> {
    if lower.len() != upper.len() {
        return Err(NipsError::DimensionMismatch {
            expected: lower.len(),
            got: upper.len(),
        });
    }
    ensure_finite("lower bound", lower)?;
    ensure_finite("upper bound", upper)?;
    if lower.iter().zip(upper.iter()).any(|(&l, &u)| l > u) {
        return Err(NipsError::InvalidInput(
            "box lower bound exceeds upper bound".into(),
        ));
    }
    Ok(())
}

pub(crate) fn ensure_finite(name: &str, y: &Array1<f64>) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(NipsError::InvalidInput(format!(
            "{name} contains non-finite components"
        )));
    }
    Ok(())
}

/// Soft threshold: componentwise `sign(y) * max(|y| - tau, 0)`.
///
/// At `|y_i| == tau` the unique minimizer is 0.
pub fn prox_l1(y: &Array1<f64>, tau: f64) -> Result<Array1<f64>> {
    ensure_finite("input", y)?;
    if !(tau >= 0.0) {
        return Err(NipsError::InvalidInput(format!(
            "threshold must be nonnegative, got {tau}"
        )));
    }
    Ok(y.mapv(|v| sign(v) * (v.abs() - tau).max(0.0)))
}

/// Projection onto the nonnegative orthant.
pub fn project_nonneg(y: &Array1<f64>) -> Result<Array1<f64>> {
    ensure_finite("input", y)?;
    Ok(y.mapv(|v| v.max(0.0)))
}

/// Prox of `weight * ||.||_1 + indicator(x >= 0)` with `tau = eta * weight`.
/// The shrink-after-project composition is exact for this pair.
pub fn prox_l1_nonneg(y: &Array1<f64>, tau: f64) -> Result<Array1<f64>> {
    prox_l1(&project_nonneg(y)?, tau)
}

/// Bisection tolerance on `|a^T x - b|`, relative to the problem scale.
fn hyperplane_tolerance(lower: &Array1<f64>, upper: &Array1<f64>, normal: &Array1<f64>) -> f64 {
    let norm_a = norm2(normal);
    let norm_ul = norm2(&(upper - lower));
    1e-10 * (1.0 + norm_a * norm_ul)
}

pub(crate) fn norm2(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn clamp(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

/// Euclidean projection onto `{ l <= x <= u, a^T x = b }`.
///
/// Solves the KKT system `x_i = clamp(y_i - nu * a_i, l_i, u_i)` by bisection
/// on the scalar multiplier `nu`; `a^T x(nu)` is nonincreasing in `nu`, so the
/// root is bracketed by doubling and then halved until the feasibility
/// tolerance is met.
pub fn project_box_hyperplane(
    y: &Array1<f64>,
    lower: &Array1<f64>,
    upper: &Array1<f64>,
    normal: &Array1<f64>,
    offset: f64,
) -> Result<Array1<f64>> {
    check_box(lower, upper)?;
    ensure_finite("input", y)?;
    ensure_finite("normal", normal)?;
    for (name, v) in [("input", y), ("normal", normal)] {
        if v.len() != lower.len() {
            let _ = name;
            return Err(NipsError::DimensionMismatch {
                expected: lower.len(),
                got: v.len(),
            });
        }
    }
    let clamp_shift = |nu: f64| -> Array1<f64> {
        Array1::from_iter(
            y.iter()
                .zip(normal.iter())
                .zip(lower.iter().zip(upper.iter()))
                .map(|((&yi, &ai), (&li, &ui))| clamp(yi - nu * ai, li, ui)),
        )
    };
    let tol = hyperplane_tolerance(lower, upper, normal);
    solve_multiplier(clamp_shift, normal, offset, tol, y, lower, upper)
}

/// Prox of an elementwise separable penalty plus the box-plus-hyperplane
/// indicator. `elementwise_prox(i, v, eta)` must solve the 1-D prox of
/// coordinate `i`'s penalty including its box clamp; the hyperplane is then
/// handled by the same multiplier bisection as [`project_box_hyperplane`].
#[allow(clippy::too_many_arguments)]
pub fn prox_separable_box_hyperplane<F>(
    y: &Array1<f64>,
    eta: f64,
    elementwise_prox: F,
    lower: &Array1<f64>,
    upper: &Array1<f64>,
    normal: &Array1<f64>,
    offset: f64,
) -> Result<Array1<f64>>
where
    F: Fn(usize, f64, f64) -> f64,
{
    check_box(lower, upper)?;
    ensure_finite("input", y)?;
    if y.len() != lower.len() || normal.len() != lower.len() {
        return Err(NipsError::DimensionMismatch {
            expected: lower.len(),
            got: y.len().max(normal.len()),
        });
    }
    if !(eta > 0.0) {
        return Err(NipsError::InvalidInput(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let shifted_prox = |nu: f64| -> Array1<f64> {
        Array1::from_iter(
            y.iter()
                .zip(normal.iter())
                .enumerate()
                .map(|(i, (&yi, &ai))| elementwise_prox(i, yi - nu * ai, eta)),
        )
    };
    let tol = hyperplane_tolerance(lower, upper, normal);
    solve_multiplier(shifted_prox, normal, offset, tol, y, lower, upper)
}

/// Shared multiplier bisection. `x_of_nu` must be componentwise nonincreasing
/// in `nu` wherever `a_i > 0` (and nondecreasing where `a_i < 0`), which holds
/// for clamps and 1-D prox maps.
fn solve_multiplier<F>(
    x_of_nu: F,
    normal: &Array1<f64>,
    offset: f64,
    tol: f64,
    y: &Array1<f64>,
    lower: &Array1<f64>,
    upper: &Array1<f64>,
) -> Result<Array1<f64>>
where
    F: Fn(f64) -> Array1<f64>,
{
    let phi = |nu: f64| normal.dot(&x_of_nu(nu));

    // Range attained by a^T x over the box tells us whether b is reachable.
    let hi_limit: f64 = normal
        .iter()
        .zip(lower.iter().zip(upper.iter()))
        .zip(y.iter())
        .map(|((&a, (&l, &u)), &yv)| {
            if a > 0.0 {
                a * u
            } else if a < 0.0 {
                a * l
            } else {
                a * clamp(yv, l, u)
            }
        })
        .sum();
    let lo_limit: f64 = normal
        .iter()
        .zip(lower.iter().zip(upper.iter()))
        .zip(y.iter())
        .map(|((&a, (&l, &u)), &yv)| {
            if a > 0.0 {
                a * l
            } else if a < 0.0 {
                a * u
            } else {
                a * clamp(yv, l, u)
            }
        })
        .sum();
    if offset > hi_limit + tol || offset < lo_limit - tol {
        return Err(NipsError::EmptySet(format!(
            "hyperplane offset {offset} outside attainable range [{lo_limit}, {hi_limit}]"
        )));
    }
    let max_abs_a = normal.iter().fold(0.0f64, |m, &a| m.max(a.abs()));
    if max_abs_a == 0.0 {
        // The hyperplane constraint degenerates to 0 = b; reachability was
        // checked above, so the plain clamp solves the problem.
        return Ok(x_of_nu(0.0));
    }

    // Bracket the root of phi(nu) - b (phi is nonincreasing in nu).
    let scale = norm2(y) + norm2(upper) + norm2(lower) + offset.abs();
    let mut radius = scale / max_abs_a + 1.0;
    let (mut nu_lo, mut nu_hi) = (-radius, radius);
    let mut expand = 0;
    while phi(nu_lo) < offset || phi(nu_hi) > offset {
        radius *= 4.0;
        nu_lo = -radius;
        nu_hi = radius;
        expand += 1;
        if expand > 100 {
            return Err(NipsError::EmptySet(
                "no multiplier achieves the hyperplane constraint".into(),
            ));
        }
    }

    const MAX_BISECT: usize = 500;
    let mut iters = 0;
    loop {
        let mid = 0.5 * (nu_lo + nu_hi);
        let x = x_of_nu(mid);
        let residual = normal.dot(&x) - offset;
        let width = nu_hi - nu_lo;
        // Continue past the feasibility tolerance until the interval hits
        // float resolution, so projections are accurate to well below `tol`.
        if width <= 1e-15 * (1.0 + nu_lo.abs() + nu_hi.abs()) {
            if residual.abs() <= tol {
                return Ok(x);
            }
            return Err(NipsError::Numerical(format!(
                "hyperplane bisection stalled with residual {residual:.3e} (tolerance {tol:.3e})"
            )));
        }
        if residual > 0.0 {
            nu_lo = mid;
        } else {
            nu_hi = mid;
        }
        iters += 1;
        if iters >= MAX_BISECT {
            if residual.abs() <= tol {
                return Ok(x);
            }
            return Err(NipsError::Numerical(format!(
                "hyperplane bisection did not converge in {MAX_BISECT} iterations; residual {residual:.3e}"
            )));
        }
    }
}

/// Outcome of a Dykstra splitting run.
#[derive(Debug, Clone)]
pub struct DykstraOutcome {
    pub x: Array1<f64>,
    pub converged: bool,
    pub sweeps: usize,
    pub last_change: f64,
}

/// Dykstra splitting for `argmin_x 1/2 ||x - y||^2 + psi(x) + indicator(x in C)`
/// given the prox of `psi` and the projection onto `C`.
///
/// Runs the four-line recursion
/// `e <- prox(x + p); p <- x + p - e; x <- project(e + q); q <- e + q - x`
/// from `x = y, p = q = 0` until the sweep-to-sweep change falls below `tol`
/// or `max_iter` sweeps elapse. On non-convergence the best iterate is still
/// returned, flagged in the outcome.
pub fn dykstra_prox<P, Q>(
    y: &Array1<f64>,
    prox: P,
    project: Q,
    max_iter: usize,
    tol: f64,
) -> Result<DykstraOutcome>
where
    P: Fn(&Array1<f64>) -> Array1<f64>,
    Q: Fn(&Array1<f64>) -> Array1<f64>,
{
    ensure_finite("input", y)?;
    if !(tol > 0.0) {
        return Err(NipsError::InvalidInput(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut x = y.clone();
    let mut p = Array1::zeros(y.len());
    let mut q = Array1::zeros(y.len());
    let mut last_change = f64::INFINITY;
    for sweep in 1..=max_iter {
        let e = prox(&(&x + &p));
        p = &x + &p - &e;
        let x_new = project(&(&e + &q));
        q = &e + &q - &x_new;
        last_change = norm2(&(&x_new - &x));
        x = x_new;
        if last_change <= tol {
            return Ok(DykstraOutcome {
                x,
                converged: true,
                sweeps: sweep,
                last_change,
            });
        }
    }
    Ok(DykstraOutcome {
        x,
        converged: false,
        sweeps: max_iter,
        last_change,
    })
}

/// Dispatch the regularizer's proximity map at index `eta`.
pub fn prox_apply(g: &ProxRegularizer, y: &Array1<f64>, eta: f64) -> Result<Array1<f64>> {
    if !(eta > 0.0) {
        return Err(NipsError::InvalidInput(format!(
            "eta must be positive, got {eta}"
        )));
    }
    match g {
        ProxRegularizer::Zero => {
            ensure_finite("input", y)?;
            Ok(y.clone())
        }
        ProxRegularizer::L1 { weight } => prox_l1(y, eta * weight),
        ProxRegularizer::NonNeg => project_nonneg(y),
        ProxRegularizer::Box { lower, upper } => {
            ensure_finite("input", y)?;
            if y.len() != lower.len() {
                return Err(NipsError::DimensionMismatch {
                    expected: lower.len(),
                    got: y.len(),
                });
            }
            Ok(Array1::from_iter(
                y.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(&v, (&l, &u))| clamp(v, l, u)),
            ))
        }
        ProxRegularizer::BoxHyperplane {
            lower,
            upper,
            normal,
            offset,
        } => project_box_hyperplane(y, lower, upper, normal, *offset),
        ProxRegularizer::L1NonNeg { weight } => prox_l1_nonneg(y, eta * weight),
        ProxRegularizer::SeparablePlusSet {
            elementwise,
            project,
            ..
        } => {
            // prox_eta(psi + ind) = Dykstra over (prox_eta^psi, projection).
            let out = dykstra_prox(
                y,
                |v| elementwise(v, eta),
                |v| project(v),
                DYKSTRA_MAX_ITER,
                DISPATCH_DYKSTRA_TOL,
            )?;
            if !out.converged {
                log::warn!(
                    "dykstra dispatch stopped at change {:.3e} after {} sweeps",
                    out.last_change,
                    out.sweeps
                );
            }
            Ok(out.x)
        }
        ProxRegularizer::Custom { prox, .. } => {
            ensure_finite("input", y)?;
            Ok(prox(y, eta))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;
    use proptest::prelude::*;

    fn assert_close(a: &Array1<f64>, b: &Array1<f64>, tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= tol, "{a} vs {b}");
        }
    }

    #[test]
    fn prox_l1_examples() {
        let out = prox_l1(&arr1(&[3.0, -0.5, 0.0]), 1.0).unwrap();
        assert_eq!(out, arr1(&[2.0, 0.0, 0.0]));
        let zero = arr1(&[0.0, 0.0]);
        assert_eq!(prox_l1(&zero, 4.2).unwrap(), zero);
        let y = arr1(&[1.5, -2.5]);
        assert_eq!(prox_l1(&y, 0.0).unwrap(), y);
    }

    #[test]
    fn prox_l1_tie_is_zero() {
        let out = prox_l1(&arr1(&[1.0, -1.0]), 1.0).unwrap();
        assert_eq!(out, arr1(&[0.0, 0.0]));
    }

    #[test]
    fn prox_l1_rejects_non_finite() {
        assert!(matches!(
            prox_l1(&arr1(&[f64::NAN]), 1.0),
            Err(NipsError::InvalidInput(_))
        ));
        assert!(matches!(
            prox_l1(&arr1(&[1.0]), -0.1),
            Err(NipsError::InvalidInput(_))
        ));
    }

    #[test]
    fn project_nonneg_examples() {
        assert_eq!(project_nonneg(&arr1(&[-1.0, 2.0])).unwrap(), arr1(&[0.0, 2.0]));
        assert_eq!(project_nonneg(&arr1(&[0.0, 0.0])).unwrap(), arr1(&[0.0, 0.0]));
        assert_eq!(project_nonneg(&arr1(&[-5.0, -1.0])).unwrap(), arr1(&[0.0, 0.0]));
    }

    #[test]
    fn prox_l1_nonneg_examples() {
        assert_eq!(
            prox_l1_nonneg(&arr1(&[2.0, -1.0]), 1.0).unwrap(),
            arr1(&[1.0, 0.0])
        );
        assert_eq!(
            prox_l1_nonneg(&arr1(&[0.3, 4.0]), 0.0).unwrap(),
            arr1(&[0.3, 4.0])
        );
        assert_eq!(
            prox_l1_nonneg(&arr1(&[0.5, 3.0]), 1.0).unwrap(),
            arr1(&[0.0, 2.0])
        );
    }

    #[test]
    fn box_hyperplane_examples() {
        let l = arr1(&[0.0, 0.0]);
        let u = arr1(&[1.0, 1.0]);
        let a = arr1(&[1.0, 1.0]);
        let out = project_box_hyperplane(&arr1(&[2.0, 2.0]), &l, &u, &a, 1.0).unwrap();
        assert_close(&out, &arr1(&[0.5, 0.5]), 1e-9);

        let out = project_box_hyperplane(&arr1(&[1.0, 0.0]), &l, &u, &a, 1.0).unwrap();
        assert_close(&out, &arr1(&[1.0, 0.0]), 1e-9);

        let out = project_box_hyperplane(&arr1(&[0.9, 0.3]), &l, &u, &a, 1.0).unwrap();
        assert_close(&out, &arr1(&[0.8, 0.2]), 1e-9);
    }

    #[test]
    fn box_hyperplane_empty_set() {
        let l = arr1(&[0.0, 0.0]);
        let u = arr1(&[1.0, 1.0]);
        let a = arr1(&[1.0, 1.0]);
        // a^T x over the box spans [0, 2]; b = 5 is unreachable.
        assert!(matches!(
            project_box_hyperplane(&arr1(&[0.5, 0.5]), &l, &u, &a, 5.0),
            Err(NipsError::EmptySet(_))
        ));
    }

    #[test]
    fn box_hyperplane_dimension_mismatch() {
        let l = arr1(&[0.0, 0.0]);
        let u = arr1(&[1.0, 1.0]);
        let a = arr1(&[1.0, 1.0]);
        assert!(matches!(
            project_box_hyperplane(&arr1(&[0.5]), &l, &u, &a, 1.0),
            Err(NipsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn separable_box_hyperplane_reduces_to_projection() {
        let y = arr1(&[0.9, 0.3]);
        let l = arr1(&[0.0, 0.0]);
        let u = arr1(&[1.0, 1.0]);
        let a = arr1(&[1.0, 1.0]);
        let proj = project_box_hyperplane(&y, &l, &u, &a, 1.0).unwrap();
        let (lc, uc) = (l.clone(), u.clone());
        let viaprox = prox_separable_box_hyperplane(
            &y,
            1.0,
            |i, v, _eta| clamp(v, lc[i], uc[i]),
            &l,
            &u,
            &a,
            1.0,
        )
        .unwrap();
        assert_close(&proj, &viaprox, 1e-8);
    }

    #[test]
    fn separable_box_hyperplane_l1_zero_multiplier() {
        // b chosen so the unconstrained shrink already satisfies the
        // hyperplane; nu* = 0 and the answer matches prox_l1_nonneg.
        let y = arr1(&[2.0, -1.0]);
        let l = arr1(&[0.0, 0.0]);
        let u = arr1(&[10.0, 10.0]);
        let a = arr1(&[1.0, 1.0]);
        let b = prox_l1_nonneg(&y, 1.0).unwrap().sum();
        assert_eq!(b, 1.0);
        let (lc, uc) = (l.clone(), u.clone());
        let out = prox_separable_box_hyperplane(
            &y,
            1.0,
            |i, v, eta| clamp(sign(v) * (v.abs() - eta).max(0.0), lc[i], uc[i]),
            &l,
            &u,
            &a,
            b,
        )
        .unwrap();
        assert_close(&out, &arr1(&[1.0, 0.0]), 1e-9);
    }

    #[test]
    fn separable_box_hyperplane_pinned_1d() {
        let y = arr1(&[3.0]);
        let l = arr1(&[0.0]);
        let u = arr1(&[1.0]);
        let a = arr1(&[1.0]);
        let out =
            prox_separable_box_hyperplane(&y, 1.0, |_i, v, _| clamp(v, 0.0, 1.0), &l, &u, &a, 1.0)
                .unwrap();
        assert_close(&out, &arr1(&[1.0]), 1e-9);
    }

    #[test]
    fn separable_bisection_stall_reports_residual() {
        // a discontinuous handle (violating the convex-prox precondition)
        // jumps across the target, so no multiplier meets the tolerance
        let y = arr1(&[0.5]);
        let l = arr1(&[0.0]);
        let u = arr1(&[1.0]);
        let a = arr1(&[1.0]);
        let err = prox_separable_box_hyperplane(
            &y,
            1.0,
            |_i, v, _eta| if v > 0.0 { 1.0 } else { 0.0 },
            &l,
            &u,
            &a,
            0.5,
        )
        .unwrap_err();
        match err {
            NipsError::Numerical(msg) => assert!(msg.contains("residual"), "{msg}"),
            other => panic!("expected a numerical error, got {other:?}"),
        }
    }

    #[test]
    fn dykstra_matches_l1_nonneg_composition() {
        let y = arr1(&[2.0, -1.0]);
        let out = dykstra_prox(
            &y,
            |v| prox_l1(v, 1.0).unwrap(),
            |v| project_nonneg(v).unwrap(),
            1000,
            1e-10,
        )
        .unwrap();
        assert!(out.converged);
        assert_close(&out.x, &prox_l1_nonneg(&y, 1.0).unwrap(), 1e-8);
    }

    #[test]
    fn dykstra_identity_prox_fixed_point() {
        let y = arr1(&[0.25, 0.75]);
        let out = dykstra_prox(
            &y,
            |v| v.clone(),
            |v| project_nonneg(v).unwrap(),
            1000,
            1e-10,
        )
        .unwrap();
        assert!(out.converged);
        assert_eq!(out.sweeps, 1);
        assert_eq!(out.x, y);
    }

    #[test]
    fn dykstra_identity_prox_reduces_to_projection() {
        let y = arr1(&[-3.0, 2.0]);
        let out = dykstra_prox(
            &y,
            |v| v.clone(),
            |v| project_nonneg(v).unwrap(),
            1000,
            1e-10,
        )
        .unwrap();
        assert!(out.converged);
        assert_close(&out.x, &arr1(&[0.0, 2.0]), 1e-12);
    }

    #[test]
    fn prox_apply_examples() {
        let y = arr1(&[1.0, 2.0]);
        assert_eq!(prox_apply(&ProxRegularizer::Zero, &y, 5.0).unwrap(), y);
        assert_eq!(
            prox_apply(&ProxRegularizer::l1(1.0).unwrap(), &arr1(&[3.0, -0.5, 0.0]), 1.0).unwrap(),
            arr1(&[2.0, 0.0, 0.0])
        );
        assert_eq!(
            prox_apply(&ProxRegularizer::NonNeg, &arr1(&[-1.0, 2.0]), 1.0).unwrap(),
            arr1(&[0.0, 2.0])
        );
    }

    #[test]
    fn prox_output_feasible() {
        let regs: Vec<ProxRegularizer> = vec![
            ProxRegularizer::Zero,
            ProxRegularizer::l1(0.7).unwrap(),
            ProxRegularizer::NonNeg,
            ProxRegularizer::box_constraint(arr1(&[-1.0, 0.0]), arr1(&[1.0, 2.0])).unwrap(),
            ProxRegularizer::box_hyperplane(
                arr1(&[0.0, 0.0]),
                arr1(&[1.0, 1.0]),
                arr1(&[1.0, 1.0]),
                1.0,
            )
            .unwrap(),
            ProxRegularizer::l1_nonneg(0.3).unwrap(),
        ];
        let y = arr1(&[2.0, -1.5]);
        for g in &regs {
            for eta in [0.1, 1.0, 10.0] {
                let p = prox_apply(g, &y, eta).unwrap();
                assert!(g.eval(&p).is_finite(), "{g:?} at eta={eta}");
            }
        }
    }

    proptest! {
        #[test]
        fn soft_threshold_nonexpansive(
            x in proptest::collection::vec(-50.0f64..50.0, 4),
            y in proptest::collection::vec(-50.0f64..50.0, 4),
            tau in 0.0f64..5.0,
        ) {
            let (x, y) = (Array1::from_vec(x), Array1::from_vec(y));
            let px = prox_l1(&x, tau).unwrap();
            let py = prox_l1(&y, tau).unwrap();
            prop_assert!(norm2(&(&px - &py)) <= norm2(&(&x - &y)) + 1e-12);
        }

        #[test]
        fn box_hyperplane_projection_is_feasible_and_idempotent(
            y in proptest::collection::vec(-4.0f64..4.0, 3),
            b in 0.2f64..2.8,
        ) {
            let y = Array1::from_vec(y);
            let l = Array1::from_elem(3, 0.0);
            let u = Array1::from_elem(3, 1.0);
            let a = Array1::from_elem(3, 1.0);
            let p = project_box_hyperplane(&y, &l, &u, &a, b).unwrap();
            let tol = hyperplane_tolerance(&l, &u, &a);
            prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((a.dot(&p) - b).abs() <= tol);
            let again = project_box_hyperplane(&p, &l, &u, &a, b).unwrap();
            prop_assert!(norm2(&(&again - &p)) <= 1e-9);
        }

        #[test]
        fn l1_nonneg_prox_is_variational_minimizer(
            y in proptest::collection::vec(-5.0f64..5.0, 3),
            d in proptest::collection::vec(-1.0f64..1.0, 3),
            eta in 0.05f64..20.0,
        ) {
            let y = Array1::from_vec(y);
            let d = Array1::from_vec(d);
            let g = ProxRegularizer::l1_nonneg(0.8).unwrap();
            let p = prox_apply(&g, &y, eta).unwrap();
            let obj = |x: &Array1<f64>| g.eval(x) + norm2(&(x - &y)).powi(2) / (2.0 * eta);
            let perturbed = &p + &d;
            prop_assert!(obj(&p) <= obj(&perturbed) + 1e-10);
        }
    }
}
