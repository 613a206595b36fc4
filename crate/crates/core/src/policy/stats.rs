use std::collections::{HashMap, VecDeque};

use crate::objectbase::ObjectId;
use crate::storage::{Outcome, PageId};

/// One object access made by the workload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccessEvent {
    pub txn_id: u64,
    pub oid: ObjectId,
    pub page_id: PageId,
    pub outcome: Outcome,
    /// Position of the access within its traversal.
    pub position: u32,
}

/// Edge weights below this are dropped when decaying.
const EDGE_PRUNE: f64 = 1e-4;

/// Decayed per-object access counts and co-access edge weights.
#[derive(Clone, Debug)]
pub struct HeatStats {
    heat: Vec<f64>,
    edges: HashMap<(ObjectId, ObjectId), f64>,
    window: usize,
    decay: f64,
    recent: VecDeque<ObjectId>,
    current_txn: Option<u64>,
    observations: u64,
}

impl HeatStats {
    /// `window` is the co-access window: accesses less than `window`
    /// positions apart in a traversal are linked. `decay` multiplies every
    /// statistic at each period boundary.
    pub fn new(num_objects: usize, window: usize, decay: f64) -> Self {
        assert!(decay > 0.0 && decay <= 1.0, "decay must be in (0, 1]");
        Self {
            heat: vec![0.0; num_objects],
            edges: HashMap::new(),
            window: window.max(1),
            decay,
            recent: VecDeque::new(),
            current_txn: None,
            observations: 0,
        }
    }

    pub fn observe(&mut self, event: &AccessEvent) {
        if self.current_txn != Some(event.txn_id) {
            self.current_txn = Some(event.txn_id);
            self.recent.clear();
        }
        self.heat[event.oid as usize] += 1.0;
        for &prev in &self.recent {
            if prev != event.oid {
                let key = (prev.min(event.oid), prev.max(event.oid));
                *self.edges.entry(key).or_insert(0.0) += 1.0;
            }
        }
        if self.window > 1 {
            if self.recent.len() == self.window - 1 {
                self.recent.pop_front();
            }
            self.recent.push_back(event.oid);
        }
        self.observations += 1;
    }

    /// Applies one period of decay.
    pub fn end_period(&mut self) {
        if self.decay == 1.0 {
            return;
        }
        let d = self.decay;
        self.heat.iter_mut().for_each(|h| *h *= d);
        self.edges.retain(|_, w| {
            *w *= d;
            *w >= EDGE_PRUNE
        });
    }

    pub fn heat(&self, oid: ObjectId) -> f64 {
        self.heat[oid as usize]
    }

    pub fn heats(&self) -> &[f64] {
        &self.heat
    }

    pub fn edge(&self, a: ObjectId, b: ObjectId) -> f64 {
        self.edges
            .get(&(a.min(b), a.max(b)))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges with both endpoints selected by `keep`, sorted by weight
    /// descending then endpoints.
    pub fn edges_within(&self, keep: impl Fn(ObjectId) -> bool) -> Vec<(ObjectId, ObjectId, f64)> {
        let mut out: Vec<_> = self
            .edges
            .iter()
            .filter(|((a, b), _)| keep(*a) && keep(*b))
            .map(|(&(a, b), &w)| (a, b, w))
            .collect();
        out.sort_by(|x, y| y.2.total_cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));
        out
    }

    /// Accesses observed since the last re-cluster.
    pub fn observations(&self) -> u64 {
        self.observations
    }

    pub fn mark_reclustered(&mut self) {
        self.observations = 0;
    }

    /// Hot-object threshold: `factor` times the mean heat of objects with
    /// non-zero heat.
    pub fn hot_threshold(&self, factor: f64) -> f64 {
        let (sum, n) = self
            .heat
            .iter()
            .filter(|h| **h > 0.0)
            .fold((0.0, 0usize), |(s, n), h| (s + h, n + 1));
        if n == 0 {
            f64::INFINITY
        } else {
            factor * sum / n as f64
        }
    }
}

/// Free-function form of [`HeatStats::observe`].
pub fn observe(stats: &mut HeatStats, event: &AccessEvent) {
    stats.observe(event);
}
