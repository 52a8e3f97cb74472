//! Brute-force oracles used by the test and verification suites.
//!
//! These minimize the defining prox objective directly on a refined grid and
//! sweep the nonexpansivity and prox-monotonicity properties. They verify
//! structure, not performance: dimensions are capped at 3.

use ndarray::Array1;

use crate::error::{NipsError, Result};
use crate::parallel::argmin_chunked;
use crate::prox::{norm2, prox_apply, ProxRegularizer};

const MAX_DIMS: usize = 3;
const MAX_GRID_SIZE: usize = 10_000_000;
const REFINE_ROUNDS: usize = 3;

/// Axis-aligned evaluation grid, at most 3 dimensions.
#[derive(Debug, Clone)]
pub struct GridSpec {
    ranges: Vec<(f64, f64)>,
    points: usize,
}

impl GridSpec {
    pub fn new(ranges: Vec<(f64, f64)>, points: usize) -> Result<Self> {
        if ranges.is_empty() || ranges.len() > MAX_DIMS {
            return Err(NipsError::InvalidInput(format!(
                "grid must have 1..={MAX_DIMS} dimensions, got {}",
                ranges.len()
            )));
        }
        if points < 3 {
            return Err(NipsError::InvalidInput(format!(
                "grid needs at least 3 points per dimension, got {points}"
            )));
        }
        if ranges.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(NipsError::InvalidInput(
                "grid range must satisfy lo < hi".into(),
            ));
        }
        let total = points.checked_pow(ranges.len() as u32);
        if total.is_none_or(|t| t > MAX_GRID_SIZE) {
            return Err(NipsError::InvalidInput(format!(
                "total grid size exceeds {MAX_GRID_SIZE}"
            )));
        }
        Ok(Self { ranges, points })
    }

    /// Symmetric cube grid `[-r, r]^dims`.
    pub fn cube(dims: usize, radius: f64, points: usize) -> Result<Self> {
        Self::new(vec![(-radius, radius); dims], points)
    }

    pub fn dims(&self) -> usize {
        self.ranges.len()
    }

    /// Coarsest spacing across dimensions.
    pub fn pitch(&self) -> f64 {
        self.ranges
            .iter()
            .map(|&(lo, hi)| (hi - lo) / (self.points - 1) as f64)
            .fold(0.0, f64::max)
    }

    /// Pitch after the standard refinement schedule.
    pub fn final_pitch(&self) -> f64 {
        let shrink = (2.0 / (self.points - 1) as f64).powi(REFINE_ROUNDS as i32);
        self.pitch() * shrink
    }
}

/// Result of a grid minimization, including the per-round best objective
/// values (nonincreasing by construction).
#[derive(Debug, Clone)]
pub struct OracleMinimizer {
    pub x: Array1<f64>,
    pub objective: f64,
    pub final_pitch: f64,
    pub round_objectives: Vec<f64>,
}

fn scan_grid(
    obj: &(dyn Fn(&Array1<f64>) -> f64 + Sync),
    ranges: &[(f64, f64)],
    points: usize,
) -> (Array1<f64>, f64) {
    let dims = ranges.len();
    let total = points.pow(dims as u32);
    let decode = |flat: usize| -> Array1<f64> {
        let mut x = Array1::zeros(dims);
        let mut rest = flat;
        for d in 0..dims {
            let idx = rest % points;
            rest /= points;
            let (lo, hi) = ranges[d];
            x[d] = lo + (hi - lo) * idx as f64 / (points - 1) as f64;
        }
        x
    };
    let (best_idx, best_val) = argmin_chunked(total, |i| obj(&decode(i)));
    (decode(best_idx), best_val)
}

/// Grid-argmin of `g(x) + ||x - y||^2 / (2 eta)` with three re-centering
/// refinement passes. Accuracy is on the order of the final grid pitch.
pub fn prox_oracle_detailed(
    g: &ProxRegularizer,
    y: &Array1<f64>,
    eta: f64,
    grid: &GridSpec,
) -> Result<OracleMinimizer> {
    if y.len() != grid.dims() {
        return Err(NipsError::DimensionMismatch {
            expected: grid.dims(),
            got: y.len(),
        });
    }
    if !(eta > 0.0) {
        return Err(NipsError::InvalidInput(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let obj = |x: &Array1<f64>| g.eval(x) + norm2(&(x - y)).powi(2) / (2.0 * eta);

    let (mut best_x, mut best_val) = scan_grid(&obj, &grid.ranges, grid.points);
    if !best_val.is_finite() {
        return Err(NipsError::Oracle(
            "regularizer is infinite on the entire grid".into(),
        ));
    }
    let mut round_objectives = vec![best_val];
    let mut ranges = grid.ranges.clone();
    for _ in 0..REFINE_ROUNDS {
        let pitches: Vec<f64> = ranges
            .iter()
            .map(|&(lo, hi)| (hi - lo) / (grid.points - 1) as f64)
            .collect();
        ranges = best_x
            .iter()
            .zip(pitches.iter())
            .map(|(&c, &p)| (c - p, c + p))
            .collect();
        let (x, val) = scan_grid(&obj, &ranges, grid.points);
        if val <= best_val {
            best_x = x;
            best_val = val;
        }
        round_objectives.push(best_val);
    }
    Ok(OracleMinimizer {
        x: best_x,
        objective: best_val,
        final_pitch: grid.final_pitch(),
        round_objectives,
    })
}

/// See [`prox_oracle_detailed`]; returns only the minimizer.
pub fn prox_oracle(
    g: &ProxRegularizer,
    y: &Array1<f64>,
    eta: f64,
    grid: &GridSpec,
) -> Result<Array1<f64>> {
    prox_oracle_detailed(g, y, eta, grid).map(|r| r.x)
}

/// Sweep of `p_g(eta) = ||prox_eta(y - eta z) - y|| / eta` (must not increase)
/// and `q_g(eta) = ||prox_eta(y - eta z) - y||` (must not decrease) over an
/// increasing eta grid.
#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
    /// Largest adjacent-pair increase of p (positive means violation).
    pub max_p_violation: f64,
    /// Largest adjacent-pair decrease of q (positive means violation).
    pub max_q_violation: f64,
}

impl MonotonicityReport {
    pub fn passes(&self, slack: f64) -> bool {
        self.max_p_violation <= slack && self.max_q_violation <= slack
    }
}

pub fn check_prox_monotonicity(
    g: &ProxRegularizer,
    y: &Array1<f64>,
    z: &Array1<f64>,
    etas: &[f64],
) -> Result<MonotonicityReport> {
    if etas.len() < 2 || etas.windows(2).any(|w| w[0] >= w[1]) || etas[0] <= 0.0 {
        return Err(NipsError::InvalidInput(
            "etas must be strictly increasing and positive".into(),
        ));
    }
    let mut p_values = Vec::with_capacity(etas.len());
    let mut q_values = Vec::with_capacity(etas.len());
    for &eta in etas {
        let shifted = y - &z.mapv(|v| eta * v);
        let q = norm2(&(&prox_apply(g, &shifted, eta)? - y));
        q_values.push(q);
        p_values.push(q / eta);
    }
    let max_p_violation = p_values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let max_q_violation = q_values
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MonotonicityReport {
        p_values,
        q_values,
        max_p_violation,
        max_q_violation,
    })
}

/// Sweep `||prox(x) - prox(y)|| - ||x - y||` over point pairs; any positive
/// excess beyond the slack falsifies nonexpansivity.
#[derive(Debug, Clone)]
pub struct NonexpansiveReport {
    pub max_violation: f64,
    pub pairs: usize,
}

impl NonexpansiveReport {
    pub fn passes(&self, slack: f64) -> bool {
        self.max_violation <= slack
    }
}

pub fn check_nonexpansive(
    g: &ProxRegularizer,
    pairs: &[(Array1<f64>, Array1<f64>)],
    eta: f64,
) -> Result<NonexpansiveReport> {
    if !(eta > 0.0) {
        return Err(NipsError::InvalidInput(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let mut max_violation = f64::NEG_INFINITY;
    for (x, y) in pairs {
        let px = prox_apply(g, x, eta)?;
        let py = prox_apply(g, y, eta)?;
        let excess = norm2(&(&px - &py)) - norm2(&(x - y));
        max_violation = max_violation.max(excess);
    }
    Ok(NonexpansiveReport {
        max_violation,
        pairs: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new(vec![(0.0, 1.0); 4], 10).is_err());
        assert!(GridSpec::new(vec![(1.0, 0.0)], 10).is_err());
        assert!(GridSpec::new(vec![(0.0, 1.0)], 2).is_err());
        assert!(GridSpec::new(vec![(0.0, 1.0); 3], 500).is_err()); // 1.25e8 points
        assert!(GridSpec::cube(2, 5.0, 101).is_ok());
    }

    #[test]
    fn oracle_matches_soft_threshold_1d() {
        let g = ProxRegularizer::l1(1.0).unwrap();
        let grid = GridSpec::new(vec![(-5.0, 5.0)], 10_001).unwrap();
        let out = prox_oracle_detailed(&g, &arr1(&[3.0]), 1.0, &grid).unwrap();
        assert!((out.x[0] - 2.0).abs() <= 1e-3);
        // refinement never increases the objective
        for w in out.round_objectives.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn oracle_identity_and_projection() {
        let grid = GridSpec::new(vec![(-5.0, 5.0)], 2001).unwrap();
        let out = prox_oracle(&ProxRegularizer::Zero, &arr1(&[1.25]), 1.0, &grid).unwrap();
        assert!((out[0] - 1.25).abs() <= 2.0 * grid.final_pitch());
        let out = prox_oracle(&ProxRegularizer::NonNeg, &arr1(&[-2.0]), 1.0, &grid).unwrap();
        assert!(out[0].abs() <= 2.0 * grid.final_pitch());
    }

    #[test]
    fn oracle_infeasible_grid_errors() {
        // nonneg orthant never intersects [-3, -1]
        let g = ProxRegularizer::NonNeg;
        let grid = GridSpec::new(vec![(-3.0, -1.0)], 101).unwrap();
        assert!(matches!(
            prox_oracle(&g, &arr1(&[0.5]), 1.0, &grid),
            Err(NipsError::Oracle(_))
        ));
    }

    #[test]
    fn monotonicity_closed_form_l1() {
        // g = l1(1), y = 1, z = 0: q(eta) = min(eta, 1), p(eta) = min(1, 1/eta)
        let g = ProxRegularizer::l1(1.0).unwrap();
        let report =
            check_prox_monotonicity(&g, &arr1(&[1.0]), &arr1(&[0.0]), &[0.5, 1.0, 2.0]).unwrap();
        let expect_q = [0.5, 1.0, 1.0];
        let expect_p = [1.0, 1.0, 0.5];
        for (got, want) in report.q_values.iter().zip(expect_q) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in report.p_values.iter().zip(expect_p) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(report.passes(1e-12));
    }

    #[test]
    fn monotonicity_zero_regularizer() {
        // prox is identity: q(eta) = eta ||z||, p(eta) = ||z||
        let g = ProxRegularizer::Zero;
        let z = arr1(&[3.0, 4.0]);
        let report =
            check_prox_monotonicity(&g, &arr1(&[1.0, -1.0]), &z, &[0.25, 1.0, 4.0]).unwrap();
        for (q, eta) in report.q_values.iter().zip([0.25, 1.0, 4.0]) {
            assert!((q - eta * 5.0).abs() < 1e-12);
        }
        for p in &report.p_values {
            assert!((p - 5.0).abs() < 1e-12);
        }
        assert!(report.passes(1e-12));
    }

    #[test]
    fn monotonicity_fixed_point() {
        // z = 0 and y already a minimizer of g: p = q = 0 everywhere
        let g = ProxRegularizer::l1(1.0).unwrap();
        let report = check_prox_monotonicity(
            &g,
            &arr1(&[0.0, 0.0]),
            &arr1(&[0.0, 0.0]),
            &[0.1, 1.0, 10.0],
        )
        .unwrap();
        assert!(report.q_values.iter().all(|&q| q == 0.0));
        assert!(report.passes(0.0));
    }

    #[test]
    fn nonexpansive_report_cases() {
        let g = ProxRegularizer::Zero;
        let x = arr1(&[1.0, 2.0]);
        let report = check_nonexpansive(&g, &[(x.clone(), x.clone())], 1.0).unwrap();
        assert!(report.max_violation <= 0.0);
        // identity prox is an isometry
        let pairs = vec![(arr1(&[1.0, 0.0]), arr1(&[0.0, 3.0]))];
        let report = check_nonexpansive(&g, &pairs, 2.0).unwrap();
        assert!(report.max_violation.abs() <= 1e-15);
    }
}
