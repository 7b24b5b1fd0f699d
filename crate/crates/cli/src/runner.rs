//! Parallel Monte Carlo execution.
//!
//! Trials are independent and their hit counts are merged by integer
//! addition, so any thread count yields the same statistics.

use rayon::prelude::*;
use uavsense_core::engine::{BatchStats, Simulator};
use uavsense_core::error::Result;

/// Runs trials `0..config.trials` on the current rayon pool.
pub fn run_parallel(sim: &Simulator) -> Result<BatchStats> {
    (0..sim.config().trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut s = BatchStats::default();
            s.record(&sim.run_trial(t)?);
            Ok(s)
        })
        .try_reduce(BatchStats::default, |mut a, b| {
            a.merge(&b);
            Ok(a)
        })
}

/// Runs `f` on a pool of `jobs` threads; `None` uses the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?;
            Ok(pool.install(f))
        }
    }
}
