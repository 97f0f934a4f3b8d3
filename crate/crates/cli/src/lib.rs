//! File formats, the benchmark harness and configuration plumbing for
//! the `uwmmse` binary. Numerics live in `uwmmse-core`; this crate owns
//! everything that touches the filesystem or the clock.

pub mod bench;
pub mod checkpoint;
pub mod dataset;
pub mod runcfg;

pub use bench::{
    compare_methods, robustness_cross_distribution, size_sweep, summarize, write_results_csv,
    write_summary_csv, Method, MethodSummary, RobustnessGroup, RunRecord, SizeGroup, SweepSpec,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError};
pub use dataset::{read_dataset, write_dataset, DatasetError};
pub use runcfg::{ConfigError, FileConfig};
