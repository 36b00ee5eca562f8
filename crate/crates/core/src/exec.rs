//! Data-parallel execution strategy.
//!
//! Batch work (closed-loop run batches, sampled certificate suites, vertex
//! enumeration) is expressed as an indexed map so the same code runs on a
//! rayon pool or sequentially. With the `parallel` feature disabled the
//! parallel variant falls back to the sequential loop, keeping call sites
//! identical. Results come back in index order either way, so outputs are
//! independent of the execution strategy.

/// How to execute an indexed batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        ExecMode::Parallel => map_parallel(n, f),
    }
}

#[cfg(feature = "parallel")]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// True when `ExecMode::Parallel` actually fans out to a thread pool.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
