//! Execution strategy for data-parallel bulk work.
//!
//! Ensembles, one-step samplers, and grid sweeps all reduce to "evaluate a
//! pure function at indices 0..n and collect the results in index order".
//! With the `parallel` feature (default) the map runs on the rayon pool;
//! without it, on the calling thread. Because results are collected into
//! index-ordered slots and reduced sequentially afterwards, the output is
//! bit-for-bit identical for any worker count, scheduling order, or feature
//! selection — a hard requirement of the reproducibility contract.
//!
//! `force_sequential` lets one binary compare both paths (the criterion bench
//! suite does exactly this); it is a diagnostic switch, not a tuning knob.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force all subsequent bulk maps onto the calling thread (true) or restore
/// the feature-selected default (false).
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

/// Whether bulk maps currently run sequentially.
pub fn is_sequential() -> bool {
    if cfg!(not(feature = "parallel")) {
        return true;
    }
    FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Evaluate `f` at every index in 0..n, returning results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !is_sequential() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Always-sequential variant, available in every build; used by the bench
/// suite as the baseline and by callers that need tiny maps without pool
/// overhead.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Configure the global rayon pool size. Call once, before any parallel
/// work; later calls are ignored (rayon pins its global pool at first use).
/// No-op in sequential builds.
#[allow(unused_variables)]
pub fn configure_workers(workers: Option<usize>) {
    #[cfg(feature = "parallel")]
    {
        if let Some(k) = workers {
            // An Err here means the pool already exists; the run proceeds on
            // the existing pool, which does not affect results (only timing).
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global();
        }
    }
}
