//! Data-parallel map helpers.
//!
//! With the `parallel` feature the mappers run on rayon; the sequential
//! versions stay available so benchmarks can compare both paths. Reductions
//! collect into vectors first and sum pairwise afterwards, so the result is
//! deterministic regardless of thread scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(n, f)
    }
}

/// Sequential fallback, always available (used by the benches as the baseline).
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Pairwise sum of a slice of f64, deterministic and numerically stable.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
