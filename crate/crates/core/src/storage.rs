//! Page store simulation: sequential initial placement, an LRU buffer and
//! I/O accounting for workload reads and re-clustering.
//!
//! Workload reads cost one I/O per buffer miss. A re-cluster plan costs one
//! read per modified page that is not resident (the read goes through the
//! buffer) plus one write per modified page; rewritten pages are dropped from
//! the buffer afterwards.

use std::collections::{BTreeMap, BTreeSet};
use std::num::NonZeroUsize;

use lru::LruCache;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectbase::{ObjectGraph, ObjectId};

pub type PageId = u32;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Replacement {
    /// Classic LRU, i.e. LRU-K with K = 1.
    #[default]
    #[serde(rename = "lru-1")]
    Lru1,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    #[default]
    Sequential,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemClass {
    #[default]
    Centralized,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prefetching {
    #[default]
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageConfig {
    pub system_class: SystemClass,
    pub page_size: u32,
    pub buffer_bytes: u64,
    pub replacement: Replacement,
    pub prefetching: Prefetching,
    pub multiprogramming_level: u32,
    pub users: u32,
    pub placement: Placement,
}

impl Default for StorageConfig {
    fn default() -> Self {
        Self {
            system_class: SystemClass::Centralized,
            page_size: 4096,
            buffer_bytes: 4 * 1024 * 1024,
            replacement: Replacement::Lru1,
            prefetching: Prefetching::None,
            multiprogramming_level: 1,
            users: 1,
            placement: Placement::Sequential,
        }
    }
}

impl StorageConfig {
    pub fn frames(&self) -> usize {
        (self.buffer_bytes / u64::from(self.page_size.max(1))) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.page_size == 0 {
            return Err(Error::config("storage.page_size", "must be positive"));
        }
        if self.frames() == 0 {
            return Err(Error::config(
                "storage.buffer_bytes",
                "buffer must hold at least one page",
            ));
        }
        if self.multiprogramming_level != 1 {
            return Err(Error::config(
                "storage.multiprogramming_level",
                "only single-transaction execution is simulated",
            ));
        }
        if self.users != 1 {
            return Err(Error::config("storage.users", "only one user is simulated"));
        }
        Ok(())
    }
}

/// Object-to-page assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PageMap {
    page_size: u32,
    page_of: Vec<PageId>,
    contents: Vec<Vec<ObjectId>>,
    fill: Vec<u32>,
    object_size: Vec<u32>,
    retired: Vec<bool>,
}

impl PageMap {
    pub fn page_size(&self) -> u32 {
        self.page_size
    }

    pub fn num_objects(&self) -> usize {
        self.page_of.len()
    }

    /// Pages ever allocated, including retired ones.
    pub fn allocated_pages(&self) -> usize {
        self.contents.len()
    }

    pub fn live_pages(&self) -> usize {
        self.retired.iter().filter(|r| !**r).count()
    }

    pub fn live_page_ids(&self) -> impl Iterator<Item = PageId> + '_ {
        self.retired
            .iter()
            .enumerate()
            .filter(|(_, r)| !**r)
            .map(|(i, _)| i as PageId)
    }

    pub fn page_of(&self, oid: ObjectId) -> Option<PageId> {
        self.page_of.get(oid as usize).copied()
    }

    pub fn contents(&self, page: PageId) -> &[ObjectId] {
        &self.contents[page as usize]
    }

    pub fn fill(&self, page: PageId) -> u32 {
        self.fill[page as usize]
    }

    pub fn object_size(&self, oid: ObjectId) -> u32 {
        self.object_size[oid as usize]
    }

    pub fn is_retired(&self, page: PageId) -> bool {
        self.retired[page as usize]
    }

    /// Checks the mutual consistency of the two views and page capacity.
    pub fn check_invariants(&self) -> Result<()> {
        let mut seen = vec![false; self.page_of.len()];
        for (p, objs) in self.contents.iter().enumerate() {
            let mut bytes = 0u64;
            for &o in objs {
                if self.page_of[o as usize] != p as PageId || seen[o as usize] {
                    return Err(Error::Internal(format!("object {o} mapped inconsistently")));
                }
                seen[o as usize] = true;
                bytes += u64::from(self.object_size[o as usize]);
            }
            if bytes != u64::from(self.fill[p]) {
                return Err(Error::Internal(format!("page {p} fill out of date")));
            }
            if bytes > u64::from(self.page_size) {
                return Err(Error::Internal(format!("page {p} over capacity")));
            }
            if self.retired[p] != objs.is_empty() {
                return Err(Error::Internal(format!("page {p} retirement flag wrong")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Internal("object without a page".into()));
        }
        Ok(())
    }
}

/// Packs objects into pages in id order; an object that does not fit in the
/// current page opens a new one.
pub fn place_sequential(graph: &ObjectGraph, config: &StorageConfig) -> Result<PageMap> {
    config.validate()?;
    let page_size = config.page_size;
    let mut map = PageMap {
        page_size,
        page_of: Vec::with_capacity(graph.len()),
        contents: Vec::new(),
        fill: Vec::new(),
        object_size: Vec::with_capacity(graph.len()),
        retired: Vec::new(),
    };
    for (id, obj) in graph.objects().iter().enumerate() {
        if obj.size > page_size {
            return Err(Error::config(
                "storage.page_size",
                format!("object {id} is {} bytes, larger than a page", obj.size),
            ));
        }
        let open_new = match map.fill.last() {
            Some(&f) => f + obj.size > page_size,
            None => true,
        };
        if open_new {
            map.contents.push(Vec::new());
            map.fill.push(0);
            map.retired.push(false);
        }
        let p = map.contents.len() - 1;
        map.contents[p].push(id as ObjectId);
        map.fill[p] += obj.size;
        map.page_of.push(p as PageId);
        map.object_size.push(obj.size);
    }
    Ok(map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Hit,
    Miss,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PageEventKind {
    Hit,
    Miss,
    Evict,
    ClusterWrite,
    ClusterRead,
}

impl PageEventKind {
    pub fn name(self) -> &'static str {
        match self {
            PageEventKind::Hit => "hit",
            PageEventKind::Miss => "miss",
            PageEventKind::Evict => "evict",
            PageEventKind::ClusterWrite => "cwrite",
            PageEventKind::ClusterRead => "cread",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PageEvent {
    pub txn_id: u64,
    pub page_id: PageId,
    pub kind: PageEventKind,
}

/// Separate tallies for workload and re-clustering I/O.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IoTally {
    pub transaction_io: u64,
    pub clustering_io: u64,
}

impl IoTally {
    pub fn total(&self) -> u64 {
        self.transaction_io + self.clustering_io
    }
}

/// LRU buffer of page frames with hit/miss and re-clustering counters.
pub struct BufferPool {
    lru: LruCache<PageId, ()>,
    hits: u64,
    misses: u64,
    cluster_reads: u64,
    cluster_writes: u64,
    txn: u64,
    trace: Option<Vec<PageEvent>>,
}

impl std::fmt::Debug for BufferPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BufferPool")
            .field("capacity", &self.capacity())
            .field("resident", &self.lru.len())
            .field("hits", &self.hits)
            .field("misses", &self.misses)
            .finish()
    }
}

impl BufferPool {
    pub fn new(frames: usize) -> Self {
        let cap = NonZeroUsize::new(frames).expect("buffer needs at least one frame");
        Self {
            lru: LruCache::new(cap),
            hits: 0,
            misses: 0,
            cluster_reads: 0,
            cluster_writes: 0,
            txn: 0,
            trace: None,
        }
    }

    pub fn from_config(config: &StorageConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self::new(config.frames()))
    }

    pub fn capacity(&self) -> usize {
        self.lru.cap().get()
    }

    pub fn resident_count(&self) -> usize {
        self.lru.len()
    }

    pub fn is_resident(&self, page: PageId) -> bool {
        self.lru.contains(&page)
    }

    /// Resident pages, most recently used first.
    pub fn recency(&self) -> Vec<PageId> {
        self.lru.iter().map(|(p, _)| *p).collect()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn tally(&self) -> IoTally {
        IoTally {
            transaction_io: self.misses,
            clustering_io: self.cluster_reads + self.cluster_writes,
        }
    }

    pub fn hit_rate(&self) -> f64 {
        let n = self.hits + self.misses;
        if n == 0 {
            0.0
        } else {
            self.hits as f64 / n as f64
        }
    }

    /// Turns on the page-event log.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<PageEvent> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn set_txn(&mut self, txn: u64) {
        self.txn = txn;
    }

    fn log(&mut self, page: PageId, kind: PageEventKind) {
        if let Some(t) = self.trace.as_mut() {
            t.push(PageEvent {
                txn_id: self.txn,
                page_id: page,
                kind,
            });
        }
    }

    /// References `page`; returns the outcome. Misses load the page,
    /// evicting the least recently used one when full.
    pub fn touch(&mut self, page: PageId) -> Outcome {
        if self.lru.get(&page).is_some() {
            self.hits += 1;
            self.log(page, PageEventKind::Hit);
            Outcome::Hit
        } else {
            self.misses += 1;
            self.log(page, PageEventKind::Miss);
            self.load(page);
            Outcome::Miss
        }
    }

    fn load(&mut self, page: PageId) {
        if let Some((evicted, ())) = self.lru.push(page, ()) {
            if evicted != page {
                self.log(evicted, PageEventKind::Evict);
            }
        }
    }

    fn invalidate(&mut self, page: PageId) {
        self.lru.pop(&page);
    }
}

/// Workload access to one object.
pub fn access_object(
    pool: &mut BufferPool,
    pagemap: &PageMap,
    oid: ObjectId,
) -> Result<(PageId, Outcome)> {
    let page = pagemap
        .page_of(oid)
        .ok_or_else(|| Error::Internal(format!("object {oid} has no page")))?;
    Ok((page, pool.touch(page)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PageTarget {
    Existing(PageId),
    /// Index into the pages allocated by the plan.
    New(u32),
}

/// Object moves produced by a clustering policy.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReclusterPlan {
    pub moves: Vec<(ObjectId, PageTarget)>,
    pub new_pages: u32,
}

impl ReclusterPlan {
    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Pages objects are moved out of, before the plan is applied.
    pub fn source_pages(&self, pagemap: &PageMap) -> BTreeSet<PageId> {
        self.moves
            .iter()
            .filter_map(|&(o, _)| pagemap.page_of(o))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReclusterReport {
    pub reads: u64,
    pub writes: u64,
    pub moved: u64,
}

/// Applies `plan` atomically: either every move is performed, or the plan is
/// rejected and nothing changes.
pub fn apply_recluster(
    pool: &mut BufferPool,
    pagemap: &mut PageMap,
    plan: &ReclusterPlan,
) -> Result<ReclusterReport> {
    let first_new = pagemap.contents.len() as u64;
    let resolve = |t: PageTarget| -> Result<PageId> {
        match t {
            PageTarget::Existing(p) => {
                if (p as usize) >= pagemap.contents.len() || pagemap.retired[p as usize] {
                    Err(Error::PlanRejected(format!(
                        "target page {p} does not exist"
                    )))
                } else {
                    Ok(p)
                }
            }
            PageTarget::New(i) if i < plan.new_pages => Ok((first_new + u64::from(i)) as PageId),
            PageTarget::New(i) => Err(Error::PlanRejected(format!(
                "new page {i} beyond the {} allocated",
                plan.new_pages
            ))),
        }
    };

    // Dry run: final location of each moved object and resulting fills.
    let mut location: BTreeMap<ObjectId, PageId> = BTreeMap::new();
    for &(oid, target) in &plan.moves {
        if pagemap.page_of(oid).is_none() {
            return Err(Error::PlanRejected(format!("object {oid} does not exist")));
        }
        location.insert(oid, resolve(target)?);
    }
    let mut fill: BTreeMap<PageId, i64> = BTreeMap::new();
    let mut modified: BTreeSet<PageId> = BTreeSet::new();
    for (&oid, &to) in &location {
        let from = pagemap.page_of[oid as usize];
        if from == to {
            continue;
        }
        let size = i64::from(pagemap.object_size[oid as usize]);
        *fill
            .entry(from)
            .or_insert_with(|| i64::from(pagemap.fill[from as usize])) -= size;
        *fill
            .entry(to)
            .or_insert_with(|| pagemap.fill.get(to as usize).map_or(0, |&f| i64::from(f))) += size;
        modified.insert(from);
        modified.insert(to);
    }
    if let Some((p, f)) = fill.iter().find(|(_, &f)| f > i64::from(pagemap.page_size)) {
        return Err(Error::PlanRejected(format!(
            "page {p} would hold {f} bytes, over the {}-byte page",
            pagemap.page_size
        )));
    }

    let mut report = ReclusterReport::default();
    for &p in &modified {
        if u64::from(p) < first_new && !pool.is_resident(p) {
            pool.cluster_reads += 1;
            report.reads += 1;
            pool.log(p, PageEventKind::ClusterRead);
            pool.load(p);
        }
    }

    for _ in 0..plan.new_pages {
        pagemap.contents.push(Vec::new());
        pagemap.fill.push(0);
        pagemap.retired.push(false);
    }
    let mut removals: BTreeMap<PageId, BTreeSet<ObjectId>> = BTreeMap::new();
    for (&oid, &to) in &location {
        let from = pagemap.page_of[oid as usize];
        if from == to {
            continue;
        }
        removals.entry(from).or_default().insert(oid);
        pagemap.contents[to as usize].push(oid);
        pagemap.page_of[oid as usize] = to;
        report.moved += 1;
    }
    for (page, gone) in removals {
        pagemap.contents[page as usize].retain(|o| !gone.contains(o));
    }
    for (&p, &f) in &fill {
        pagemap.fill[p as usize] = f as u32;
    }
    for p in first_new as usize..pagemap.contents.len() {
        pagemap.retired[p] = pagemap.contents[p].is_empty();
    }
    for &p in &modified {
        if pagemap.contents[p as usize].is_empty() {
            pagemap.retired[p as usize] = true;
        }
        pool.cluster_writes += 1;
        report.writes += 1;
        pool.log(p, PageEventKind::ClusterWrite);
        pool.invalidate(p);
    }
    Ok(report)
}
