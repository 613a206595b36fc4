//! Experiment harness: config files, the transaction loop, H sweeps, trace
//! analysis and CSV output.
//!
//! Each transaction picks a root, traverses from it, and touches every
//! visited object through the buffer. Every `trigger_period` transactions
//! the clustering policy may re-cluster. Workload and re-clustering I/O are
//! tallied separately.

mod analyze;
mod config;
mod output;
mod run;
mod sweep;

pub use analyze::{analyze_trace, HotRegionStats};
pub use config::{ExperimentConfig, SweepConfig};
pub use output::{
    emit_results, read_regions, read_root_trace, write_page_trace, write_regions, write_root_trace,
    write_series, RESULTS_HEADER,
};
pub use run::{
    run_experiment, run_on_graph, IntervalIo, RegionInfo, RootRecord, RunMetrics, RunOptions,
    RunOutput, SERIES_INTERVAL,
};
pub use sweep::{sweep_h, SweepRow};
