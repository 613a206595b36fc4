//! Workload-dynamics evaluation kit for object stores.
//!
//! The crate generates a synthetic object database, drives it with
//! configurable styles of access-pattern change, and measures dynamic
//! clustering policies on a simulated page store with an LRU buffer.
//!
//! Layout:
//! * [`objectbase`] builds the object graph and runs depth-bounded traversals.
//! * [`dynamics`] holds H-regions, regional protocols, dependency protocols
//!   and the root selector that combines them.
//! * [`storage`] simulates page placement, the LRU buffer and I/O accounting.
//! * [`policy`] collects access statistics and emits re-cluster plans.
//! * [`harness`] wires everything into runs, sweeps and trace analysis.

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod objectbase;
pub mod policy;
pub mod storage;

mod hash;

pub use dynamics::{
    AssignMethod, DependencyConfig, DependencyProtocol, Direction, DynamicsState, HRegionSpec,
    HRegionState, Phase, RegionalConfig, RegionalProtocol, RootChoice,
};
pub use error::{Error, Result};
pub use harness::{
    analyze_trace, emit_results, run_experiment, run_on_graph, sweep_h, ExperimentConfig,
    HotRegionStats, RegionInfo, RootRecord, RunMetrics, RunOptions, SweepRow,
};
pub use objectbase::{
    generate_database, simple_traversal, ClassDescriptor, DbParams, ObjectGraph, ObjectId,
};
pub use policy::{maybe_recluster, AccessEvent, HeatStats, PolicyConfig, PolicyKind};
pub use storage::{
    access_object, apply_recluster, place_sequential, BufferPool, IoTally, Outcome, PageId,
    PageMap, PageTarget, ReclusterPlan, StorageConfig,
};
