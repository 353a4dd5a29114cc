//! Data-parallel map helpers.
//!
//! With the `parallel` feature enabled, maps run on a rayon pool whose size
//! is capped by the `BIREF_THREADS` environment variable (0 or unset means
//! automatic). Results are collected in input order, so parallel and
//! sequential execution produce bit-identical output.

#[cfg(feature = "parallel")]
use once_cell::sync::Lazy;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
static POOL: Lazy<Option<rayon::ThreadPool>> = Lazy::new(|| {
    let n: usize = std::env::var("BIREF_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    if n == 0 {
        None
    } else {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("failed to build thread pool"),
        )
    }
});

#[cfg(feature = "parallel")]
fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match POOL.as_ref() {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Ordered map over `0..n`.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    install(|| (0..n).into_par_iter().map(f).collect())
}

/// Ordered map over `0..n`, sequential fallback.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Ordered fallible map over `0..n`; returns the error from the lowest
/// failing index when running sequentially (any failing index in parallel).
#[cfg(feature = "parallel")]
pub fn try_map_indexed<T: Send, E: Send>(
    n: usize,
    f: impl Fn(usize) -> Result<T, E> + Sync + Send,
) -> Result<Vec<T>, E> {
    install(|| (0..n).into_par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
pub fn try_map_indexed<T, E>(n: usize, f: impl Fn(usize) -> Result<T, E>) -> Result<Vec<T>, E> {
    (0..n).map(f).collect()
}

/// Sequential reference path, always available (used by the benchmarks to
/// compare against the rayon path).
pub fn map_indexed_seq<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}
