use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use crate::dynamics::{DynamicsState, HRegionState, Phase, RootChoice};
use crate::error::Result;
use crate::objectbase::{generate_database, simple_traversal, ObjectGraph, ObjectId};
use crate::policy::{maybe_recluster, AccessEvent, PolicyKind};
use crate::storage::{access_object, apply_recluster, place_sequential, BufferPool, PageEvent};

/// Transactions per entry of [`RunMetrics::series`].
pub const SERIES_INTERVAL: u64 = 100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntervalIo {
    pub start_txn: u64,
    pub transaction_io: u64,
    pub clustering_io: u64,
}

impl IntervalIo {
    pub fn total(&self) -> u64 {
        self.transaction_io + self.clustering_io
    }
}

#[derive(Clone, Debug)]
pub struct RunMetrics {
    pub transaction_io: u64,
    pub clustering_io: u64,
    pub total_io: u64,
    pub hit_rate: f64,
    pub series: Vec<IntervalIo>,
    pub change_steps: u64,
    pub fallbacks: u64,
    pub reclusters: u64,
    pub objects_moved: u64,
    pub config_digest: String,
    pub seed: u64,
    pub wall_time: Duration,
}

/// Wall-clock time is left out of equality.
impl PartialEq for RunMetrics {
    fn eq(&self, other: &Self) -> bool {
        self.transaction_io == other.transaction_io
            && self.clustering_io == other.clustering_io
            && self.total_io == other.total_io
            && self.hit_rate.to_bits() == other.hit_rate.to_bits()
            && self.series == other.series
            && self.change_steps == other.change_steps
            && self.fallbacks == other.fallbacks
            && self.reclusters == other.reclusters
            && self.objects_moved == other.objects_moved
            && self.config_digest == other.config_digest
            && self.seed == other.seed
    }
}

impl RunMetrics {
    /// Total I/O of the transactions in `[from, to)`; both ends must fall on
    /// interval boundaries.
    pub fn io_between(&self, from: u64, to: u64) -> u64 {
        self.series
            .iter()
            .filter(|i| i.start_txn >= from && i.start_txn < to)
            .map(IntervalIo::total)
            .sum()
    }

    /// Total I/O over the second half of the run.
    pub fn second_half_io(&self, num_transactions: u64) -> u64 {
        let mid = num_transactions / 2 / SERIES_INTERVAL * SERIES_INTERVAL;
        self.io_between(mid, u64::MAX)
    }
}

/// One root selection as recorded in a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RootRecord {
    pub txn_id: u64,
    pub root: ObjectId,
    pub phase: Phase,
    pub fallback: bool,
    pub region: Option<usize>,
}

impl RootRecord {
    fn new(txn_id: u64, c: RootChoice) -> Self {
        Self {
            txn_id,
            root: c.root,
            phase: c.phase,
            fallback: c.fallback,
            region: c.region,
        }
    }

    /// Label used in trace files: `randomisation`, `dependency` or
    /// `fallback`.
    pub fn phase_label(&self) -> &'static str {
        if self.fallback {
            "fallback"
        } else {
            self.phase.name()
        }
    }
}

/// Size and starting weight of a region in the randomisation-phase region
/// set, for trace analysis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionInfo {
    pub size: usize,
    pub weight: f64,
}

impl RegionInfo {
    pub fn from_regions(regions: &[HRegionState]) -> Vec<Self> {
        regions
            .iter()
            .map(|r| RegionInfo {
                size: r.members.len(),
                weight: r.weight,
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub record_roots: bool,
    pub record_pages: bool,
}

#[derive(Debug)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub roots: Vec<RootRecord>,
    pub pages: Vec<PageEvent>,
    /// Region set that randomisation-phase roots are annotated against.
    pub regions: Vec<RegionInfo>,
}

/// Runs one experiment end to end, generating its database.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunMetrics> {
    config.validate()?;
    let graph = generate_database(&config.db)?;
    Ok(run_on_graph(config, &graph, RunOptions::default())?.metrics)
}

/// Runs one experiment on an already generated database.
pub fn run_on_graph(
    config: &ExperimentConfig,
    graph: &ObjectGraph,
    opts: RunOptions,
) -> Result<RunOutput> {
    config.validate()?;
    let started = Instant::now();
    let mut pagemap = place_sequential(graph, &config.storage)?;
    let mut pool = BufferPool::from_config(&config.storage)?;
    if opts.record_pages {
        pool.enable_trace();
    }
    // Workload randomness comes only from this generator; policies are
    // deterministic, so every policy sees the same root stream.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dynamics = DynamicsState::new(
        graph,
        config.regional.clone(),
        config.dependency.clone(),
        config.integration,
        &mut rng,
    )?;
    let regions = if dynamics.first_phase_regions().is_empty() {
        RegionInfo::from_regions(dynamics.regions())
    } else {
        RegionInfo::from_regions(dynamics.first_phase_regions())
    };

    let policy = &config.policy;
    let clustering = policy.kind != PolicyKind::NoClustering;
    let mut stats = clustering.then(|| policy.new_stats(graph.len()));
    let period = u64::from(policy.trigger_period);

    let mut roots = Vec::new();
    let mut series = Vec::new();
    let mut interval_start = pool.tally();
    let mut reclusters = 0;
    let mut moved = 0;

    for txn in 0..config.num_transactions {
        pool.set_txn(txn);
        let choice = dynamics.next_root(graph, &mut rng)?;
        if opts.record_roots {
            roots.push(RootRecord::new(txn, choice));
        }
        let seq = simple_traversal(graph, choice.root, config.traversal_depth)?;
        for (pos, &oid) in seq.iter().enumerate() {
            let (page_id, outcome) = access_object(&mut pool, &pagemap, oid)?;
            if let Some(s) = stats.as_mut() {
                s.observe(&AccessEvent {
                    txn_id: txn,
                    oid,
                    page_id,
                    outcome,
                    position: pos as u32,
                });
            }
        }
        dynamics.record_traversal(seq);
        dynamics.advance();

        if let Some(s) = stats.as_mut() {
            if (txn + 1) % period == 0 {
                let plan = maybe_recluster(policy, s, &pagemap);
                if !plan.is_empty() {
                    let report = apply_recluster(&mut pool, &mut pagemap, &plan)?;
                    reclusters += 1;
                    moved += report.moved;
                    s.mark_reclustered();
                }
                s.end_period();
            }
        }

        if (txn + 1) % SERIES_INTERVAL == 0 || txn + 1 == config.num_transactions {
            let now = pool.tally();
            series.push(IntervalIo {
                start_txn: txn / SERIES_INTERVAL * SERIES_INTERVAL,
                transaction_io: now.transaction_io - interval_start.transaction_io,
                clustering_io: now.clustering_io - interval_start.clustering_io,
            });
            interval_start = now;
        }
    }

    let tally = pool.tally();
    let metrics = RunMetrics {
        transaction_io: tally.transaction_io,
        clustering_io: tally.clustering_io,
        total_io: tally.total(),
        hit_rate: pool.hit_rate(),
        series,
        change_steps: dynamics.change_steps(),
        fallbacks: dynamics.fallbacks(),
        reclusters,
        objects_moved: moved,
        config_digest: config.digest(),
        seed: config.seed,
        wall_time: started.elapsed(),
    };
    Ok(RunOutput {
        metrics,
        roots,
        pages: pool.take_trace(),
        regions,
    })
}
