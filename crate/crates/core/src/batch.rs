//! Order-preserving batch map over independent work items.
//!
//! With the `parallel` feature (default) work is spread over rayon's pool;
//! without it everything runs on the calling thread. Results come back in
//! input order either way, so downstream output does not depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items` on the calling thread.
pub fn map_sequential<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Maps `f` over `items` on the current rayon pool.
#[cfg(feature = "parallel")]
pub fn map_parallel<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// The default batch map: parallel when the feature is on.
#[cfg(feature = "parallel")]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    map_parallel(items, f)
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    map_sequential(items, f)
}

/// Runs `op` with at most `workers` threads for batch maps (`None` or 0 keeps
/// the global default). Without the `parallel` feature this just calls `op`.
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(w) if w > 0 => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(op),
            Err(_) => op(),
        },
        _ => op(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R: Send>(_workers: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    op()
}
