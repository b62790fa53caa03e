//! Multi-threaded shot execution.

use rayon::prelude::*;
use shiftrule_core::ShotExecutor;

use crate::error::{CliError, CliResult};

/// Runs shots on the current rayon pool; results come back in shot order.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParallelShots;

impl ShotExecutor for ParallelShots {
    fn run(&self, shots: usize, sample: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        (0..shots).into_par_iter().with_min_len(64).map(sample).collect()
    }
}

/// Pool with `threads` workers, or rayon's default when `None` or zero.
pub fn thread_pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads.filter(|&n| n > 0) {
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))
}
