//! Drivers that reproduce the figure-level studies as CSV and PGM artifacts.
//!
//! Every driver fans work out over the current rayon pool and collects
//! results in (cell, seed) order, so output bytes do not depend on the
//! number of workers. Run a driver inside [`with_jobs`] to bound the pool.

mod artifacts;
mod cmnist;
mod coords;
mod correlation;
mod heatmap;
mod modulo;
mod sequences;

pub use artifacts::Artifacts;
pub use cmnist::{run_cmnist_study, CmnistCell, CmnistRow, CmnistStudy, CmnistStudySpec};
pub use coords::{run_coordinate_study, CoordinateRun, CoordinateStudy, CoordinateStudySpec, CoordinateTarget};
pub use correlation::{random_pool, run_correlation_study, CorrelationStudy, PoolEntry};
pub use heatmap::{
    default_scales, log_spaced, normalize_jointly, run_heatmap_sweep, CellSummary, SweepResult, SweepRow, SweepSpec,
};
pub use modulo::{run_modulo_study, ModuloRow, ModuloStudy, ModuloStudySpec, PeakFit};
pub use sequences::{run_transformer_study, TransformerStudy, TransformerStudySpec};

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `jobs` workers (0 = one per core).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}
