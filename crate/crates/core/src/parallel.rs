//! Row-level data parallelism with a sequential fallback.
//!
//! Every helper assigns each output element to exactly one task and keeps the
//! per-element accumulation order fixed, so results are bit-identical whether
//! the `parallel` feature is enabled or not.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fills `out` row by row; each row is produced by one call to `fill(y, row)`.
pub(crate) fn fill_rows<F>(out: &mut [f64], width: usize, fill: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(width)
            .enumerate()
            .for_each(|(y, row)| fill(y, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(width).enumerate().for_each(|(y, row)| fill(y, row));
    }
}

/// Collects `f(0..n)` preserving index order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
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
        (0..n).map(f).collect()
    }
}

/// Runs `f` on a single worker thread, regardless of the ambient pool.
/// Timing harnesses use this so reported numbers are single-threaded.
#[cfg(feature = "parallel")]
pub(crate) fn run_single_threaded<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("failed to build single-thread pool")
        .install(f)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn run_single_threaded<R>(f: impl FnOnce() -> R) -> R {
    f()
}
