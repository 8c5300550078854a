//! Job-count dispatch between the sequential path and the rayon pool.
//!
//! `jobs == 1` always runs the plain sequential loop. Any other value
//! (0 = use the ambient pool size) goes through rayon when the
//! `parallel` feature is enabled; without the feature every call is
//! sequential. Results are collected in input order, so both paths
//! produce identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map_ordered<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if jobs != 1 {
        return items.par_iter().map(&f).collect();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
    items.iter().map(f).collect()
}

/// Runs `f` inside a rayon pool of `jobs` threads when `jobs > 1` and the
/// `parallel` feature is on; otherwise runs it directly.
pub fn run_with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if jobs > 1
        && let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()
    {
        return pool.install(f);
    }
    let _ = jobs;
    f()
}
