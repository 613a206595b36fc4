//! H-regions and the regional protocols that move probability weight
//! between them over time.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::mix3;
use crate::objectbase::{apportion, ObjectGraph, ObjectId};

/// Weights within this distance of a bound are snapped onto it, so repeated
/// `±incr` steps land exactly on `lowest`/`highest`.
pub const WEIGHT_EPS: f64 = 1e-12;

const SCALED_ORDER_SALT: u64 = 0x5ca1_ab1e_0dd5_eed5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionalProtocol {
    #[serde(rename = "moving")]
    MovingWindow,
    #[serde(rename = "gradual")]
    GradualMovingWindow,
    #[serde(rename = "cycles")]
    CyclesOfChange,
}

impl RegionalProtocol {
    pub fn name(self) -> &'static str {
        match self {
            RegionalProtocol::MovingWindow => "moving",
            RegionalProtocol::GradualMovingWindow => "gradual",
            RegionalProtocol::CyclesOfChange => "cycles",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "moving" => Some(RegionalProtocol::MovingWindow),
            "gradual" => Some(RegionalProtocol::GradualMovingWindow),
            "cycles" => Some(RegionalProtocol::CyclesOfChange),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignMethod {
    Random,
    ByClass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    fn flip(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

/// Parameters of one H-region.
#[derive(Clone, Debug, PartialEq)]
pub struct HRegionSpec {
    pub hr_size: f64,
    pub init_prob_w: f64,
    pub lowest_prob_w: f64,
    pub highest_prob_w: f64,
    pub prob_w_incr_size: f64,
    pub object_assign_method: AssignMethod,
    pub init_dir: Direction,
}

impl HRegionSpec {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let field = |f: &str| format!("{prefix}.{f}");
        if !(self.hr_size > 0.0 && self.hr_size <= 1.0) {
            return Err(Error::config(field("hr_size"), "must be in (0, 1]"));
        }
        if !(self.lowest_prob_w >= 0.0) {
            return Err(Error::config(field("lowest_prob_w"), "must be >= 0"));
        }
        if !(self.lowest_prob_w <= self.init_prob_w) {
            return Err(Error::config(
                field("init_prob_w"),
                "must be >= lowest_prob_w",
            ));
        }
        if !(self.init_prob_w <= self.highest_prob_w) {
            return Err(Error::config(
                field("init_prob_w"),
                "must be <= highest_prob_w",
            ));
        }
        if !self.highest_prob_w.is_finite() {
            return Err(Error::config(field("highest_prob_w"), "must be finite"));
        }
        if !(self.prob_w_incr_size >= 0.0 && self.prob_w_incr_size.is_finite()) {
            return Err(Error::config(field("prob_w_incr_size"), "must be >= 0"));
        }
        Ok(())
    }

    /// One clamped step of `incr` in direction `dir`.
    pub fn step(&self, weight: f64, dir: Direction) -> f64 {
        match dir {
            Direction::Up => {
                let w = weight + self.prob_w_incr_size;
                if w >= self.highest_prob_w - WEIGHT_EPS {
                    self.highest_prob_w
                } else {
                    w
                }
            }
            Direction::Down => {
                let w = weight - self.prob_w_incr_size;
                if w <= self.lowest_prob_w + WEIGHT_EPS {
                    self.lowest_prob_w
                } else {
                    w
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HRegionState {
    pub spec: HRegionSpec,
    pub members: Vec<ObjectId>,
    pub weight: f64,
    pub dir: Direction,
}

impl HRegionState {
    fn at_bound(&self, dir: Direction) -> bool {
        match dir {
            Direction::Up => self.weight >= self.spec.highest_prob_w,
            Direction::Down => self.weight <= self.spec.lowest_prob_w,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionalConfig {
    pub protocol: RegionalProtocol,
    /// Change rate: one over the number of root selections between pattern
    /// changes. Zero freezes the pattern.
    pub h: f64,
    pub hr_size: f64,
    pub init_prob_w: f64,
    pub lowest_prob_w: f64,
    pub highest_prob_w: f64,
    pub prob_w_incr_size: f64,
    pub object_assign_method: AssignMethod,
    pub init_dir: Direction,
    /// Fixed weight of the unchanging third region under the cycles
    /// protocol. Defaults to `lowest_prob_w` scaled by the region's size
    /// relative to one cycling region.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles_remainder_weight: Option<f64>,
}

impl Default for RegionalConfig {
    fn default() -> Self {
        Self {
            protocol: RegionalProtocol::MovingWindow,
            h: 0.0,
            hr_size: 0.003,
            init_prob_w: 0.80,
            lowest_prob_w: 0.0006,
            highest_prob_w: 0.80,
            prob_w_incr_size: 0.02,
            object_assign_method: AssignMethod::Random,
            init_dir: Direction::Down,
            cycles_remainder_weight: None,
        }
    }
}

/// `ceil(x)`, except values within rounding noise of an integer snap to it.
pub(crate) fn ceil_snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

pub(crate) fn floor_snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

impl RegionalConfig {
    pub fn template(&self) -> HRegionSpec {
        HRegionSpec {
            hr_size: self.hr_size,
            init_prob_w: self.init_prob_w,
            lowest_prob_w: self.lowest_prob_w,
            highest_prob_w: self.highest_prob_w,
            prob_w_incr_size: self.prob_w_incr_size,
            object_assign_method: self.object_assign_method,
            init_dir: self.init_dir,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.h) {
            return Err(Error::config("regional.h", "must be in [0, 1]"));
        }
        self.template().validate("regional")?;
        if self.protocol == RegionalProtocol::CyclesOfChange && self.hr_size > 0.5 {
            return Err(Error::config(
                "regional.hr_size",
                "cycles protocol needs two regions of hr_size, so at most 0.5",
            ));
        }
        if let Some(w) = self.cycles_remainder_weight {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::config(
                    "regional.cycles_remainder_weight",
                    "must be >= 0",
                ));
            }
        }
        Ok(())
    }

    /// Root selections between pattern changes, `ceil(1/h)`; `None` for h=0.
    pub fn change_period(&self) -> Option<u64> {
        if self.h <= 0.0 {
            None
        } else {
            Some(ceil_snap(1.0 / self.h) as u64)
        }
    }

    /// Region count for the window protocols, `floor(1/hr_size)`.
    pub fn window_regions(&self) -> usize {
        floor_snap(1.0 / self.hr_size).max(1.0) as usize
    }

    fn slot_fractions(&self) -> Vec<f64> {
        match self.protocol {
            RegionalProtocol::CyclesOfChange => {
                vec![
                    self.hr_size,
                    self.hr_size,
                    (1.0 - 2.0 * self.hr_size).max(0.0),
                ]
            }
            _ => vec![1.0; self.window_regions()],
        }
    }
}

fn assign_order(
    universe: &[ObjectId],
    method: AssignMethod,
    graph: &ObjectGraph,
    rng: &mut impl Rng,
) -> Vec<ObjectId> {
    let mut order = universe.to_vec();
    match method {
        AssignMethod::Random => order.shuffle(rng),
        AssignMethod::ByClass => order.sort_by_key(|&o| (graph.class_of(o), o)),
    }
    order
}

fn slice_members(order: Vec<ObjectId>, sizes: &[usize]) -> Vec<Vec<ObjectId>> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut it = order.into_iter();
    for &s in sizes {
        out.push(it.by_ref().take(s).collect());
    }
    out
}

/// Partitions `universe` into the H-regions of `config.protocol` and sets
/// their initial weights.
pub fn build_hregions(
    config: &RegionalConfig,
    universe: &[ObjectId],
    graph: &ObjectGraph,
    rng: &mut impl Rng,
) -> Result<Vec<HRegionState>> {
    config.validate()?;
    if universe.is_empty() {
        return Err(Error::Argument(
            "cannot build H-regions over an empty set".into(),
        ));
    }
    let fractions = config.slot_fractions();
    if fractions.len() > universe.len() {
        return Err(Error::config(
            "regional.hr_size",
            format!(
                "{} regions requested but only {} objects",
                fractions.len(),
                universe.len()
            ),
        ));
    }
    let sizes = apportion(universe.len(), &fractions, 0);
    let order = assign_order(universe, config.object_assign_method, graph, rng);
    let members = slice_members(order, &sizes);
    let template = config.template();

    let regions = match config.protocol {
        RegionalProtocol::MovingWindow | RegionalProtocol::GradualMovingWindow => {
            let single = members.len() == 1;
            members
                .into_iter()
                .enumerate()
                .map(|(i, m)| {
                    let weight = if single {
                        template.init_prob_w
                    } else if i == 0 {
                        template.highest_prob_w
                    } else {
                        template.lowest_prob_w
                    };
                    HRegionState {
                        spec: template.clone(),
                        members: m,
                        weight,
                        dir: template.init_dir,
                    }
                })
                .collect()
        }
        RegionalProtocol::CyclesOfChange => {
            let mut it = members.into_iter();
            let (a, b, rest) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
            let remainder_weight = config.cycles_remainder_weight.unwrap_or_else(|| {
                template.lowest_prob_w * rest.len() as f64 / a.len().max(1) as f64
            });
            let fixed = HRegionSpec {
                hr_size: fractions[2],
                init_prob_w: remainder_weight,
                lowest_prob_w: remainder_weight,
                highest_prob_w: remainder_weight,
                prob_w_incr_size: 0.0,
                ..template.clone()
            };
            vec![
                HRegionState {
                    spec: template.clone(),
                    members: a,
                    weight: template.highest_prob_w,
                    dir: Direction::Down,
                },
                HRegionState {
                    spec: template.clone(),
                    members: b,
                    weight: template.lowest_prob_w,
                    dir: Direction::Up,
                },
                HRegionState {
                    spec: fixed,
                    members: rest,
                    weight: remainder_weight,
                    dir: template.init_dir,
                },
            ]
        }
    };
    Ok(regions)
}

/// Two-level draw: a region with probability `weight / Σ weight` over the
/// non-empty regions, then one of its members uniformly. Returns the region
/// index and the chosen object.
pub fn select_root(regions: &[HRegionState], rng: &mut impl Rng) -> Result<(usize, ObjectId)> {
    let total: f64 = regions
        .iter()
        .filter(|r| !r.members.is_empty())
        .map(|r| r.weight)
        .sum();
    if !(total > 0.0) {
        return Err(Error::config(
            "regional",
            "every non-empty H-region has zero probability weight",
        ));
    }
    let mut x = rng.gen::<f64>() * total;
    let mut chosen = None;
    for (i, r) in regions.iter().enumerate() {
        if r.members.is_empty() || r.weight <= 0.0 {
            continue;
        }
        chosen = Some(i);
        if x < r.weight {
            break;
        }
        x -= r.weight;
    }
    // `chosen` ends on the last eligible region if rounding ran past the end.
    let i = chosen.expect("positive total implies an eligible region");
    let m = &regions[i].members;
    Ok((i, m[rng.gen_range(0..m.len())]))
}

/// Probability of each region under [`select_root`].
pub fn region_probabilities(regions: &[HRegionState]) -> Vec<f64> {
    let total: f64 = regions
        .iter()
        .filter(|r| !r.members.is_empty())
        .map(|r| r.weight)
        .sum();
    regions
        .iter()
        .map(|r| {
            if r.members.is_empty() || total <= 0.0 {
                0.0
            } else {
                r.weight / total
            }
        })
        .collect()
}

/// Regions plus the bookkeeping the regional protocols need between changes.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionalState {
    pub regions: Vec<HRegionState>,
    /// Index of the region the window currently sits on.
    pub window_pos: usize,
    /// Window move still in progress under the gradual protocol:
    /// `(outgoing, incoming)`.
    pub transition: Option<(usize, usize)>,
    pub roots_since_change: u64,
    pub change_steps: u64,
    universe_len: usize,
}

impl RegionalState {
    pub fn new(regions: Vec<HRegionState>) -> Self {
        let universe_len = regions.iter().map(|r| r.members.len()).sum();
        Self {
            regions,
            window_pos: 0,
            transition: None,
            roots_since_change: 0,
            change_steps: 0,
            universe_len,
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.regions.iter().map(|r| r.weight).collect()
    }

    pub fn universe_len(&self) -> usize {
        self.universe_len
    }

    /// Maps each object to the index of its region.
    pub fn region_index(&self, num_objects: usize) -> Vec<u32> {
        let mut idx = vec![u32::MAX; num_objects];
        for (i, r) in self.regions.iter().enumerate() {
            for &o in &r.members {
                idx[o as usize] = i as u32;
            }
        }
        idx
    }
}

/// Counts one root selection and applies a change step when the configured
/// period is reached. Returns whether a change step happened.
pub fn advance_pattern(state: &mut RegionalState, config: &RegionalConfig) -> bool {
    let Some(period) = config.change_period() else {
        return false;
    };
    state.roots_since_change += 1;
    if state.roots_since_change < period {
        return false;
    }
    state.roots_since_change = 0;
    state.change_steps += 1;
    change_step(state, config.protocol);
    true
}

/// One pattern-change step, independent of cadence.
pub fn change_step(state: &mut RegionalState, protocol: RegionalProtocol) {
    let n = state.regions.len();
    match protocol {
        RegionalProtocol::MovingWindow => {
            if n < 2 {
                return;
            }
            let from = state.window_pos;
            let to = (from + 1) % n;
            let out = &mut state.regions[from];
            out.weight = out.spec.lowest_prob_w;
            out.dir = Direction::Down;
            let inc = &mut state.regions[to];
            inc.weight = inc.spec.highest_prob_w;
            inc.dir = Direction::Up;
            state.window_pos = to;
        }
        RegionalProtocol::GradualMovingWindow => {
            if n < 2 {
                return;
            }
            let (from, to) = match state.transition {
                Some(pair) => pair,
                None => {
                    let from = state.window_pos;
                    let to = (from + 1) % n;
                    state.regions[from].dir = Direction::Down;
                    state.regions[to].dir = Direction::Up;
                    state.window_pos = to;
                    (from, to)
                }
            };
            for i in [from, to] {
                let r = &mut state.regions[i];
                r.weight = r.spec.step(r.weight, r.dir);
            }
            let done = state.regions[from].at_bound(Direction::Down)
                && state.regions[to].at_bound(Direction::Up);
            state.transition = if done { None } else { Some((from, to)) };
        }
        RegionalProtocol::CyclesOfChange => {
            for r in state.regions.iter_mut().take(2) {
                r.weight = r.spec.step(r.weight, r.dir);
                if r.at_bound(r.dir) {
                    r.dir = r.dir.flip();
                }
            }
        }
    }
}

/// Partitions a candidate set into `min(N, |candidates|)` regions whose
/// weights and sizes aggregate contiguous ranges of the `N` regions in
/// `state`. With `N` regions and the full universe this reproduces the plain
/// regional distribution.
pub fn scaled_regions(
    state: &RegionalState,
    method: AssignMethod,
    candidates: &[ObjectId],
    graph: &ObjectGraph,
) -> Vec<HRegionState> {
    let n_slots = state.regions.len();
    let m = candidates.len();
    if m == 0 || n_slots == 0 {
        return Vec::new();
    }
    let k = n_slots.min(m);
    let mut order = candidates.to_vec();
    match method {
        AssignMethod::Random => {
            order.sort_by_key(|&o| (mix3(SCALED_ORDER_SALT, 0, u64::from(o)), o))
        }
        AssignMethod::ByClass => order.sort_by_key(|&o| (graph.class_of(o), o)),
    }
    let universe = state.universe_len.max(1) as f64;
    let mut fracs = Vec::with_capacity(k);
    let mut shells = Vec::with_capacity(k);
    for j in 0..k {
        let lo = j * n_slots / k;
        let hi = (j + 1) * n_slots / k;
        let slots = &state.regions[lo..hi];
        let weight: f64 = slots.iter().map(|r| r.weight).sum();
        let frac: f64 = slots.iter().map(|r| r.members.len() as f64).sum::<f64>() / universe;
        let spec = HRegionSpec {
            hr_size: frac,
            init_prob_w: slots.iter().map(|r| r.spec.init_prob_w).sum(),
            lowest_prob_w: slots.iter().map(|r| r.spec.lowest_prob_w).sum(),
            highest_prob_w: slots.iter().map(|r| r.spec.highest_prob_w).sum(),
            ..slots[0].spec.clone()
        };
        fracs.push(frac);
        shells.push((spec, weight, slots[0].dir));
    }
    let sizes = apportion(m, &fracs, 1);
    slice_members(order, &sizes)
        .into_iter()
        .zip(shells)
        .map(|(members, (spec, weight, dir))| HRegionState {
            spec,
            members,
            weight,
            dir,
        })
        .collect()
}
