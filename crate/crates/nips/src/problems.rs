//! Canonical test problems shared by the verification suites, the CLI
//! harness, and the test code.

use std::sync::Arc;

use ndarray::Array1;

use crate::error::Result;
use crate::incremental::DecomposableProblem;
use crate::model::{estimate_lipschitz, CompositeProblem, SmoothOracle};
use crate::prox::ProxRegularizer;

/// `1/2 ||x - center||^2` with no regularizer.
pub fn quadratic(center: Array1<f64>) -> CompositeProblem {
    CompositeProblem::new(SmoothOracle::quadratic(center), ProxRegularizer::Zero)
}

/// `1/2 ||x - center||^2` over the nonnegative orthant.
pub fn constrained_quadratic(center: Array1<f64>) -> CompositeProblem {
    CompositeProblem::new(SmoothOracle::quadratic(center), ProxRegularizer::NonNeg)
}

/// The 1-D double well `x^4/4 - x^2/2` (stationary points -1, 0, 1) with the
/// gradient Lipschitz constant estimated by sampling on `[-2, 2]`.
pub fn quartic_1d() -> CompositeProblem {
    let oracle = quartic_oracle(None);
    let l = estimate_lipschitz(&oracle, &Array1::zeros(1), 2.0, 100, 42)
        .expect("estimate on a fixed region cannot fail");
    CompositeProblem::new(quartic_oracle(Some(l)), ProxRegularizer::Zero)
}

fn quartic_oracle(l: Option<f64>) -> SmoothOracle {
    SmoothOracle::new(
        1,
        // sup |f''| = sup |3x^2 - 1| = 11 on [-2, 2]
        l.unwrap_or(11.0),
        Arc::new(|x: &Array1<f64>| {
            let v = x[0];
            0.25 * v.powi(4) - 0.5 * v * v
        }),
        Arc::new(|x: &Array1<f64>| {
            let v = x[0];
            Array1::from_vec(vec![v.powi(3) - v])
        }),
    )
    .expect("static oracle construction")
}

/// Sum of shifted 1-D quadratics `sum_t 1/2 (x - shift_t)^2` with the given
/// regularizer; the smooth minimizer is the mean shift.
pub fn quadratic_sum(shifts: &[f64], reg: ProxRegularizer) -> Result<DecomposableProblem> {
    let components = shifts
        .iter()
        .map(|&s| SmoothOracle::quadratic(Array1::from_vec(vec![s])))
        .collect();
    DecomposableProblem::new(components, reg)
}

/// Sum of shifted n-D quadratics `sum_t 1/2 ||x - c_t||^2`.
pub fn quadratic_sum_nd(centers: Vec<Array1<f64>>, reg: ProxRegularizer) -> Result<DecomposableProblem> {
    let components = centers.into_iter().map(SmoothOracle::quadratic).collect();
    DecomposableProblem::new(components, reg)
}
