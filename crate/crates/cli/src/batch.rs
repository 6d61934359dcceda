//! Parallel batch runner.

use epd_core::{run_instance, summarize, BatchConfig, BatchOutcome, Result};
use rayon::prelude::*;

/// Same output as [`epd_core::run_batch`], with instances solved on the
/// rayon pool. Instances depend only on `(master_seed, index)`, so the
/// result does not depend on scheduling.
pub fn run_batch_parallel(config: &BatchConfig) -> Result<BatchOutcome> {
    config.validate()?;
    let results = (0..config.instances as u64)
        .into_par_iter()
        .map(|i| run_instance(config, i))
        .collect::<Result<Vec<_>>>()?;
    let stats = summarize(&results)?;
    Ok(BatchOutcome { stats, results })
}
