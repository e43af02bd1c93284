//! Data-parallel helper with a sequential fallback.
//!
//! With the `parallel` feature (the default) work fans out over the rayon
//! global pool; without it the same loop runs sequentially. Results are
//! collected by index and reduced by callers in a fixed order, so output is
//! bit-identical for any thread count and for the sequential build.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<R, F>(count: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<R, F>(count: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..count).map(f).collect()
}
