//! Access-pattern dynamics: H-regions, regional protocols, dependency
//! protocols, the hybrid setting and the regional/dependency integration.
//!
//! [`DynamicsState`] owns everything one run needs and produces the stream of
//! workload roots. Per selection the caller does
//! `next_root` → traversal → `record_traversal` → `advance`.

mod dependency;
mod regions;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::objectbase::{ObjectGraph, ObjectId};

pub use dependency::{
    dependency_candidates, same_class_subset, CandidateError, Candidates, DependencyConfig,
    DependencyProtocol,
};
pub use regions::{
    advance_pattern, build_hregions, change_step, region_probabilities, scaled_regions,
    select_root, AssignMethod, Direction, HRegionSpec, HRegionState, RegionalConfig,
    RegionalProtocol, RegionalState, WEIGHT_EPS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Randomisation,
    Dependency,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Randomisation => "randomisation",
            Phase::Dependency => "dependency",
        }
    }
}

/// One selected root and how it was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RootChoice {
    pub root: ObjectId,
    pub phase: Phase,
    /// Index of the region the root was drawn from, within the region set
    /// used for that draw (global regions, the first-phase hot/cold pair, or
    /// the regions scaled onto a candidate set). `None` for uniform draws.
    pub region: Option<usize>,
    /// The dependency protocol had no candidates and the root came from the
    /// randomisation phase instead.
    pub fallback: bool,
}

#[derive(Clone, Debug)]
pub struct DynamicsState {
    regional_config: RegionalConfig,
    deps: DependencyConfig,
    integrated: bool,
    regional: RegionalState,
    /// Static hot/cold pair used by the randomisation phase of the hybrid
    /// setting. Empty when the dependency protocol is random selection.
    first_phase: Vec<HRegionState>,
    phase: Phase,
    phase_step: u32,
    prev_root: Option<ObjectId>,
    prev_traversal: Option<Vec<ObjectId>>,
    fallbacks: u64,
}

fn hot_cold_regions(
    graph: &ObjectGraph,
    hot_fraction: f64,
    hot_prob: f64,
    rng: &mut impl Rng,
) -> Vec<HRegionState> {
    let n = graph.len();
    let mut order: Vec<ObjectId> = (0..n as ObjectId).collect();
    order.shuffle(rng);
    let hot_n = ((hot_fraction * n as f64).round() as usize).clamp(1, n);
    let cold = order.split_off(hot_n);
    let spec = |w: f64, size: f64| HRegionSpec {
        hr_size: size,
        init_prob_w: w,
        lowest_prob_w: w,
        highest_prob_w: w,
        prob_w_incr_size: 0.0,
        object_assign_method: AssignMethod::Random,
        init_dir: Direction::Down,
    };
    let hot_size = hot_n as f64 / n as f64;
    vec![
        HRegionState {
            spec: spec(hot_prob, hot_size),
            members: order,
            weight: hot_prob,
            dir: Direction::Down,
        },
        HRegionState {
            spec: spec(1.0 - hot_prob, 1.0 - hot_size),
            members: cold,
            weight: 1.0 - hot_prob,
            dir: Direction::Down,
        },
    ]
}

impl DynamicsState {
    pub fn new(
        graph: &ObjectGraph,
        regional_config: RegionalConfig,
        deps: DependencyConfig,
        integrated: bool,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        regional_config.validate()?;
        deps.validate()?;
        let universe: Vec<ObjectId> = (0..graph.len() as ObjectId).collect();
        let regions = build_hregions(&regional_config, &universe, graph, rng)?;
        let first_phase = if deps.protocol == DependencyProtocol::RandomSel {
            Vec::new()
        } else {
            hot_cold_regions(
                graph,
                deps.first_phase_hot_fraction,
                deps.first_phase_hot_prob,
                rng,
            )
        };
        Ok(Self {
            regional_config,
            deps,
            integrated,
            regional: RegionalState::new(regions),
            first_phase,
            phase: Phase::Randomisation,
            phase_step: 0,
            prev_root: None,
            prev_traversal: None,
            fallbacks: 0,
        })
    }

    pub fn regional(&self) -> &RegionalState {
        &self.regional
    }

    pub fn regions(&self) -> &[HRegionState] {
        &self.regional.regions
    }

    pub fn first_phase_regions(&self) -> &[HRegionState] {
        &self.first_phase
    }

    pub fn regional_config(&self) -> &RegionalConfig {
        &self.regional_config
    }

    pub fn dependency_config(&self) -> &DependencyConfig {
        &self.deps
    }

    pub fn is_integrated(&self) -> bool {
        self.integrated
    }

    /// Phase the next selection will be drawn in.
    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn prev_root(&self) -> Option<ObjectId> {
        self.prev_root
    }

    pub fn change_steps(&self) -> u64 {
        self.regional.change_steps
    }

    pub fn fallbacks(&self) -> u64 {
        self.fallbacks
    }

    pub fn next_root(&mut self, graph: &ObjectGraph, rng: &mut impl Rng) -> Result<RootChoice> {
        let choice = if self.deps.protocol == DependencyProtocol::RandomSel {
            let (region, root) = select_root(&self.regional.regions, rng)?;
            RootChoice {
                root,
                phase: Phase::Randomisation,
                region: Some(region),
                fallback: false,
            }
        } else {
            next_root_hybrid(self, graph, rng)?
        };
        self.prev_root = Some(choice.root);
        Ok(choice)
    }

    /// Stores the traversal executed from the latest root, for the
    /// traversed-objects protocol.
    pub fn record_traversal(&mut self, seq: Vec<ObjectId>) {
        self.prev_traversal = Some(seq);
    }

    /// Applies the regional protocol's cadence after a root selection.
    pub fn advance(&mut self) -> bool {
        advance_pattern(&mut self.regional, &self.regional_config)
    }

    fn randomisation_draw(&self, rng: &mut impl Rng, fallback: bool) -> Result<RootChoice> {
        let (region, root) = select_root(&self.first_phase, rng)?;
        Ok(RootChoice {
            root,
            phase: Phase::Randomisation,
            region: Some(region),
            fallback,
        })
    }
}

/// Hybrid setting: one randomisation-phase root, then `hybrid_r` roots from
/// the dependency protocol, repeated. An empty candidate set falls back to a
/// randomisation draw and restarts the dependency phase count.
pub fn next_root_hybrid(
    state: &mut DynamicsState,
    graph: &ObjectGraph,
    rng: &mut impl Rng,
) -> Result<RootChoice> {
    let r = state.deps.hybrid_r;
    if state.phase == Phase::Randomisation || r == 0 {
        let choice = state.randomisation_draw(rng, false)?;
        if r > 0 {
            state.phase = Phase::Dependency;
            state.phase_step = 0;
        }
        return Ok(choice);
    }

    let cands = dependency_candidates(
        &state.deps,
        graph,
        state.prev_root,
        state.prev_traversal.as_deref(),
    );
    let choice = match cands {
        Ok(c) => {
            let (root, region) = if state.integrated {
                integrated_next_root(state, graph, &c, rng)?
            } else {
                match &c {
                    Candidates::Universe => (rng.gen_range(0..graph.len() as ObjectId), None),
                    Candidates::Objects(v) => (v[rng.gen_range(0..v.len())], None),
                }
            };
            state.phase_step += 1;
            if state.phase_step >= r {
                state.phase = Phase::Randomisation;
                state.phase_step = 0;
            }
            RootChoice {
                root,
                phase: Phase::Dependency,
                region,
                fallback: false,
            }
        }
        Err(_) => {
            state.fallbacks += 1;
            state.phase = Phase::Dependency;
            state.phase_step = 0;
            state.randomisation_draw(rng, true)?
        }
    };
    Ok(choice)
}

/// Draws the next root from a candidate set partitioned into H-regions that
/// follow the regional protocol's current weights.
pub fn integrated_next_root(
    state: &DynamicsState,
    graph: &ObjectGraph,
    candidates: &Candidates,
    rng: &mut impl Rng,
) -> Result<(ObjectId, Option<usize>)> {
    match candidates {
        Candidates::Universe => {
            let (region, root) = select_root(&state.regional.regions, rng)?;
            Ok((root, Some(region)))
        }
        Candidates::Objects(v) => {
            let regions = scaled_regions(
                &state.regional,
                state.regional_config.object_assign_method,
                v,
                graph,
            );
            let (region, root) = select_root(&regions, rng)?;
            Ok((root, Some(region)))
        }
    }
}
