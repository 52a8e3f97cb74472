//! Seeded synthetic data generators for the experiment harness.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NipsError, Result};
use crate::io::SparseMatrix;

/// Dense matrix with entries uniform on [0, 1).
pub fn uniform_dense(nrows: usize, ncols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((nrows, ncols), |_| rng.random::<f64>())
}

/// Nonnegative planted factors with `Y = X A`.
#[derive(Debug, Clone)]
pub struct PlantedFactors {
    pub x: Array2<f64>,
    pub a: Array2<f64>,
}

/// Exactly factorable nonnegative matrix `Y = X A` with uniform factors;
/// rank at most `k`.
pub fn planted_nmf(nrows: usize, ncols: usize, k: usize, seed: u64) -> Result<(Array2<f64>, PlantedFactors)> {
    if k == 0 || k > nrows.min(ncols) {
        return Err(NipsError::InvalidInput(format!(
            "rank {k} outside 1..=min({nrows}, {ncols})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((nrows, k), |_| rng.random::<f64>());
    let a = Array2::from_shape_fn((k, ncols), |_| rng.random::<f64>());
    let y = x.dot(&a);
    Ok((y, PlantedFactors { x, a }))
}

/// Sparse matrix whose entries are present independently with the given
/// density and uniform on [0, 1) when present.
pub fn sparse_uniform(nrows: usize, ncols: usize, density: f64, seed: u64) -> Result<SparseMatrix> {
    if !(0.0..=1.0).contains(&density) {
        return Err(NipsError::InvalidInput(format!(
            "density must lie in [0, 1], got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    for j in 0..ncols {
        for i in 0..nrows {
            if rng.random::<f64>() < density {
                triplets.push((i, j, rng.random::<f64>()));
            }
        }
    }
    SparseMatrix::from_triplets(nrows, ncols, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_dense_is_deterministic() {
        let a = uniform_dense(4, 4, 7);
        let b = uniform_dense(4, 4, 7);
        assert_eq!(a, b);
        let c = uniform_dense(4, 4, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn planted_is_nonnegative_and_low_rank() {
        let (y, factors) = planted_nmf(20, 30, 3, 5).unwrap();
        assert!(y.iter().all(|&v| v >= 0.0));
        assert_eq!(factors.x.dim(), (20, 3));
        assert_eq!(factors.a.dim(), (3, 30));
        // rank <= 3: any 4x4 minor-ish check via the factorization itself
        let reconstructed = factors.x.dot(&factors.a);
        let diff = (&y - &reconstructed).iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn sparse_uniform_nnz_concentrates() {
        let m = sparse_uniform(1000, 1000, 0.01, 7).unwrap();
        let expected = 10_000.0;
        assert!((m.nnz() as f64 - expected).abs() <= 0.1 * expected, "{}", m.nnz());
    }
}
