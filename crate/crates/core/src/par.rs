//! Data-parallel seam.
//!
//! All embarrassingly parallel loops in the crate (ensemble trials, ES
//! offspring evaluation, routing restarts, random-sampling checks) go
//! through [`map_indexed`]. With the `parallel` feature (default) it runs
//! on the rayon thread pool; without it, the same code path degrades to a
//! sequential iterator. Results are returned in index order either way, so
//! outputs are independent of thread count.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Name of the active execution mode, used by benches to label results.
pub fn execution_mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    }
}
