//! Dependency protocols: candidate sets for the next root derived from the
//! previous root or traversal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::regions::ceil_snap;
use crate::hash::mix3;
use crate::objectbase::{ObjectGraph, ObjectId};

const SAME_CLASS_SALT: u64 = 0xc1a5_5ed0_5eed_0001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DependencyProtocol {
    #[serde(rename = "random")]
    RandomSel,
    #[serde(rename = "by-reference")]
    ByReference,
    #[serde(rename = "traversed")]
    TraversedObjects,
    #[serde(rename = "same-class")]
    SameClass,
}

impl DependencyProtocol {
    pub fn name(self) -> &'static str {
        match self {
            DependencyProtocol::RandomSel => "random",
            DependencyProtocol::ByReference => "by-reference",
            DependencyProtocol::TraversedObjects => "traversed",
            DependencyProtocol::SameClass => "same-class",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random" => Some(DependencyProtocol::RandomSel),
            "by-reference" => Some(DependencyProtocol::ByReference),
            "traversed" => Some(DependencyProtocol::TraversedObjects),
            "same-class" => Some(DependencyProtocol::SameClass),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependencyConfig {
    pub protocol: DependencyProtocol,
    /// Dependency-phase roots drawn after each randomisation-phase root.
    pub hybrid_r: u32,
    pub same_class_subset_fraction: f64,
    /// Share of the database in the static hot region used by the
    /// randomisation phase.
    pub first_phase_hot_fraction: f64,
    /// Probability of drawing from that hot region.
    pub first_phase_hot_prob: f64,
}

impl Default for DependencyConfig {
    fn default() -> Self {
        Self {
            protocol: DependencyProtocol::RandomSel,
            hybrid_r: 5,
            same_class_subset_fraction: 0.1,
            first_phase_hot_fraction: 0.03,
            first_phase_hot_prob: 0.80,
        }
    }
}

impl DependencyConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        use crate::error::Error;
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(self.same_class_subset_fraction) {
            return Err(Error::config(
                "dependency.same_class_subset_fraction",
                "must be in (0, 1]",
            ));
        }
        if !unit(self.first_phase_hot_fraction) {
            return Err(Error::config(
                "dependency.first_phase_hot_fraction",
                "must be in (0, 1]",
            ));
        }
        if !(0.0..=1.0).contains(&self.first_phase_hot_prob) {
            return Err(Error::config(
                "dependency.first_phase_hot_prob",
                "must be in [0, 1]",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Candidates {
    /// Every object in the database.
    Universe,
    /// Sorted, duplicate-free object ids.
    Objects(Vec<ObjectId>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum CandidateError {
    #[error("candidate set is empty")]
    Empty,
    #[error("protocol needs a previous root")]
    MissingPrevRoot,
    #[error("protocol needs the previous traversal")]
    MissingTraversal,
}

/// Candidate set for the next root under `config.protocol`.
pub fn dependency_candidates(
    config: &DependencyConfig,
    graph: &ObjectGraph,
    prev_root: Option<ObjectId>,
    prev_traversal: Option<&[ObjectId]>,
) -> Result<Candidates, CandidateError> {
    let set = match config.protocol {
        DependencyProtocol::RandomSel => return Ok(Candidates::Universe),
        DependencyProtocol::ByReference => {
            let root = prev_root.ok_or(CandidateError::MissingPrevRoot)?;
            let mut v: Vec<_> = graph.refs(root).iter().map(|r| r.target).collect();
            v.sort_unstable();
            v.dedup();
            v
        }
        DependencyProtocol::TraversedObjects => {
            let mut v = prev_traversal
                .ok_or(CandidateError::MissingTraversal)?
                .to_vec();
            v.sort_unstable();
            v.dedup();
            v
        }
        DependencyProtocol::SameClass => {
            let root = prev_root.ok_or(CandidateError::MissingPrevRoot)?;
            same_class_subset(graph, root, config.same_class_subset_fraction)
        }
    };
    if set.is_empty() {
        Err(CandidateError::Empty)
    } else {
        Ok(Candidates::Objects(set))
    }
}

/// Subset of `root`'s class of size `ceil(fraction × |class|)`, as a pure
/// function of `(root, class, fraction)`.
///
/// The class is put in a fixed hash order and cut into consecutive groups of
/// the subset size; the subset is the group holding `root`, wrapping around
/// the end so every group has full size. Roots in the same group share a
/// subset.
pub fn same_class_subset(graph: &ObjectGraph, root: ObjectId, fraction: f64) -> Vec<ObjectId> {
    let class = graph.class_of(root);
    let members = graph.instances(class);
    let len = members.len();
    let k = (ceil_snap(fraction * len as f64) as usize).clamp(1, len);
    let mut order: Vec<(u64, ObjectId)> = members
        .iter()
        .map(|&o| (mix3(SAME_CLASS_SALT, u64::from(class), u64::from(o)), o))
        .collect();
    order.sort_unstable();
    let pos = order
        .iter()
        .position(|&(_, o)| o == root)
        .expect("root is an instance of its own class");
    let start = pos / k * k;
    let mut subset: Vec<ObjectId> = (0..k).map(|i| order[(start + i) % len].1).collect();
    subset.sort_unstable();
    subset
}
