//! Dynamic clustering policies.
//!
//! Policies watch the access stream through [`HeatStats`] and, every
//! `trigger_period` transactions, may emit a [`ReclusterPlan`]. Pages are
//! ranked by how much heat density they lose to cold bytes: a page's
//! quality is its heat density divided by the density it would have if it
//! held only its hot objects, and its estimated gain is
//! `hot_heat × (1 − quality)`. Pure pages (all hot or all cold) have no gain.
//!
//! * `none` never re-clusters.
//! * `prp` takes the `worst_pages_n` pages with the highest gain and repacks
//!   their objects hottest first.
//! * `gp` takes the same pages and groups their objects by greedy graph
//!   partitioning of the co-access graph before packing.
//! * `aggressive` runs the `gp` step over every page with positive gain, with
//!   no page cap and no observation gate.

mod partition;
mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectbase::ObjectId;
use crate::storage::{PageId, PageMap, PageTarget, ReclusterPlan};

pub use partition::{greedy_partition, pack_next_fit};
pub use stats::{observe, AccessEvent, HeatStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "none")]
    NoClustering,
    #[serde(rename = "prp")]
    Prp,
    #[serde(rename = "gp")]
    Gp,
    #[serde(rename = "aggressive")]
    Aggressive,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::NoClustering,
        PolicyKind::Prp,
        PolicyKind::Gp,
        PolicyKind::Aggressive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::NoClustering => "none",
            PolicyKind::Prp => "prp",
            PolicyKind::Gp => "gp",
            PolicyKind::Aggressive => "aggressive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub trigger_period: u32,
    pub worst_pages_n: u32,
    pub min_observations: u64,
    pub decay: f64,
    pub co_access_window: u32,
    /// Objects with heat at least this multiple of the mean non-zero heat
    /// count as hot when rating pages.
    pub hot_factor: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::NoClustering,
            trigger_period: 200,
            worst_pages_n: 50,
            min_observations: 2000,
            decay: 0.9,
            co_access_window: 2,
            hot_factor: 1.0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trigger_period == 0 {
            return Err(Error::config("policy.trigger_period", "must be at least 1"));
        }
        if matches!(self.kind, PolicyKind::Prp | PolicyKind::Gp) && self.worst_pages_n == 0 {
            return Err(Error::config("policy.worst_pages_n", "must be at least 1"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::config("policy.decay", "must be in (0, 1]"));
        }
        if self.co_access_window == 0 {
            return Err(Error::config(
                "policy.co_access_window",
                "must be at least 1",
            ));
        }
        if !(self.hot_factor > 0.0 && self.hot_factor.is_finite()) {
            return Err(Error::config("policy.hot_factor", "must be positive"));
        }
        Ok(())
    }

    pub fn new_stats(&self, num_objects: usize) -> HeatStats {
        HeatStats::new(num_objects, self.co_access_window as usize, self.decay)
    }
}

/// How well one page is clustered.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PageAssessment {
    pub page: PageId,
    pub heat: f64,
    pub hot_heat: f64,
    pub hot_bytes: u32,
    pub used_bytes: u32,
    /// Heat density relative to the density of the page's hot objects alone;
    /// 1 for pure pages.
    pub quality: f64,
    pub gain: f64,
}

pub fn assess_page(
    stats: &HeatStats,
    pagemap: &PageMap,
    page: PageId,
    threshold: f64,
) -> PageAssessment {
    let mut heat = 0.0;
    let mut hot_heat = 0.0;
    let mut hot_bytes = 0u32;
    for &o in pagemap.contents(page) {
        let h = stats.heat(o);
        heat += h;
        if h >= threshold {
            hot_heat += h;
            hot_bytes += pagemap.object_size(o);
        }
    }
    let used = pagemap.fill(page);
    let (quality, gain) = if hot_bytes == 0 || hot_bytes == used || heat <= 0.0 {
        (1.0, 0.0)
    } else {
        let density = heat / f64::from(used);
        let achievable = hot_heat / f64::from(hot_bytes);
        let q = (density / achievable).min(1.0);
        (q, hot_heat * (1.0 - q))
    };
    PageAssessment {
        page,
        heat,
        hot_heat,
        hot_bytes,
        used_bytes: used,
        quality,
        gain,
    }
}

/// Live pages with positive estimated gain, worst first.
pub fn rank_pages(stats: &HeatStats, pagemap: &PageMap, hot_factor: f64) -> Vec<PageAssessment> {
    let threshold = stats.hot_threshold(hot_factor);
    let mut ranked: Vec<_> = pagemap
        .live_page_ids()
        .map(|p| assess_page(stats, pagemap, p, threshold))
        .filter(|a| a.gain > 0.0)
        .collect();
    ranked.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.page.cmp(&b.page)));
    ranked
}

fn by_heat_desc(stats: &HeatStats, objs: &mut [ObjectId]) {
    objs.sort_by(|&a, &b| stats.heat(b).total_cmp(&stats.heat(a)).then(a.cmp(&b)));
}

/// Turns packed bins into moves, reusing `pages` in order and allocating new
/// pages for any extra bins.
fn plan_from_bins(bins: Vec<Vec<ObjectId>>, pages: &[PageId], pagemap: &PageMap) -> ReclusterPlan {
    let mut plan = ReclusterPlan::default();
    for (i, bin) in bins.into_iter().enumerate() {
        let target = match pages.get(i) {
            Some(&p) => PageTarget::Existing(p),
            None => {
                plan.new_pages += 1;
                PageTarget::New(plan.new_pages - 1)
            }
        };
        for o in bin {
            if PageTarget::Existing(pagemap.page_of(o).expect("mapped object")) != target {
                plan.moves.push((o, target));
            }
        }
    }
    if plan
        .moves
        .iter()
        .all(|(_, t)| !matches!(t, PageTarget::New(_)))
    {
        plan.new_pages = 0;
    }
    plan
}

fn repack_prp(stats: &HeatStats, pagemap: &PageMap, pages: &[PageId]) -> ReclusterPlan {
    let mut objs: Vec<ObjectId> = pages
        .iter()
        .flat_map(|&p| pagemap.contents(p).iter().copied())
        .collect();
    by_heat_desc(stats, &mut objs);
    let groups: Vec<Vec<ObjectId>> = objs.into_iter().map(|o| vec![o]).collect();
    let bins = pack_next_fit(&groups, |o| pagemap.object_size(o), pagemap.page_size());
    plan_from_bins(bins, pages, pagemap)
}

fn repack_gp(stats: &HeatStats, pagemap: &PageMap, pages: &[PageId]) -> ReclusterPlan {
    let mut objs: Vec<ObjectId> = pages
        .iter()
        .flat_map(|&p| pagemap.contents(p).iter().copied())
        .collect();
    by_heat_desc(stats, &mut objs);
    let mut selected = vec![false; pagemap.num_objects()];
    for &o in &objs {
        selected[o as usize] = true;
    }
    let edges = stats.edges_within(|o| selected[o as usize]);
    let mut clusters = greedy_partition(
        &objs,
        |o| pagemap.object_size(o),
        &edges,
        pagemap.page_size(),
    );
    for c in clusters.iter_mut() {
        by_heat_desc(stats, c);
    }
    let cluster_heat = |c: &Vec<ObjectId>| c.iter().map(|&o| stats.heat(o)).sum::<f64>();
    clusters.sort_by(|a, b| {
        cluster_heat(b)
            .total_cmp(&cluster_heat(a))
            .then(a.iter().min().cmp(&b.iter().min()))
    });
    let bins = pack_next_fit(&clusters, |o| pagemap.object_size(o), pagemap.page_size());
    plan_from_bins(bins, pages, pagemap)
}

/// Decides what to re-cluster now. Called every `trigger_period`
/// transactions; returns an empty plan when nothing should move.
pub fn maybe_recluster(
    policy: &PolicyConfig,
    stats: &HeatStats,
    pagemap: &PageMap,
) -> ReclusterPlan {
    let conservative = match policy.kind {
        PolicyKind::NoClustering => return ReclusterPlan::default(),
        PolicyKind::Prp | PolicyKind::Gp => true,
        PolicyKind::Aggressive => false,
    };
    if conservative && stats.observations() < policy.min_observations {
        return ReclusterPlan::default();
    }
    let mut ranked = rank_pages(stats, pagemap, policy.hot_factor);
    if conservative {
        ranked.truncate(policy.worst_pages_n as usize);
    }
    if ranked.is_empty() {
        return ReclusterPlan::default();
    }
    let mut pages: Vec<PageId> = ranked.iter().map(|a| a.page).collect();
    pages.sort_unstable();
    match policy.kind {
        PolicyKind::Prp => repack_prp(stats, pagemap, &pages),
        _ => repack_gp(stats, pagemap, &pages),
    }
}
