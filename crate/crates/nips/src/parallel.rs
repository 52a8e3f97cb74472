//! Thin switch between rayon and sequential execution.
//!
//! All call sites map independent work items to indexed results and reduce
//! sequentially afterwards, so results are identical (bitwise) with the
//! `parallel` feature on or off and across thread counts.

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Argmin of `eval` over `0..n`, parallelized over fixed-size chunks.
/// Ties break toward the smaller index, so the winner does not depend on
/// chunk scheduling.
pub(crate) fn argmin_chunked<F>(n: usize, eval: F) -> (usize, f64)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    const CHUNK: usize = 8192;
    let chunks = n.div_ceil(CHUNK);
    let locals = map_collect(chunks, |c| {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(n);
        let mut best = (start, eval(start));
        for i in start + 1..end {
            let v = eval(i);
            if v < best.1 {
                best = (i, v);
            }
        }
        best
    });
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, v) in locals {
        if v < best.1 || (v == best.1 && i < best.0) {
            best = (i, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_collect_preserves_order() {
        let v = map_collect(100, |i| i * i);
        assert_eq!(v[7], 49);
        assert_eq!(v.len(), 100);
    }

    #[test]
    fn argmin_ties_break_low() {
        // two equal minima at 3 and 40000 (different chunks)
        let (i, v) = argmin_chunked(100_000, |i| if i == 3 || i == 40_000 { -1.0 } else { 0.0 });
        assert_eq!(i, 3);
        assert_eq!(v, -1.0);
    }
}
