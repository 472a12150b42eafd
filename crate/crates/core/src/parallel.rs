//! Order-preserving parallel map over a fixed worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Applies `f` to `(index, item)` for every item. Results come back in input
/// order, so the output does not depend on `workers`.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn((usize, &T)) -> R + Sync + Send,
{
    if workers <= 1 || items.len() <= 1 {
        return Ok(items.iter().enumerate().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().enumerate().map(f).collect()))
}

/// Worker count from the `DICKE_WORKERS` environment variable, if set.
pub fn workers_from_env() -> Option<usize> {
    std::env::var("DICKE_WORKERS")
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n: &usize| n > 0)
}
