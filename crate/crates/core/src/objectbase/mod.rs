//! Synthetic object database and the depth-first traversal workload.
//!
//! The schema follows the usual generic-benchmark layout: a fixed number of
//! classes, each with an instance size and a list of typed class-level
//! references. Every object of a class gets one outbound reference per class
//! reference slot, pointing at a uniformly chosen instance of the referenced
//! class.

mod dump;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dump::{dump_graph, load_graph, read_graph, write_graph};

pub type ObjectId = u32;
pub type ClassId = u32;
pub type RefType = u8;

/// Shape of a random draw in the generator. Only uniform draws are supported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    #[default]
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbParams {
    pub num_classes: u32,
    pub max_refs_per_class: u32,
    pub base_size: u32,
    pub num_objects: u32,
    pub num_ref_types: u32,
    pub reference_type_distribution: Distribution,
    pub class_reference_distribution: Distribution,
    pub objects_in_classes_distribution: Distribution,
    pub object_references_distribution: Distribution,
    pub seed: u64,
}

impl Default for DbParams {
    fn default() -> Self {
        Self {
            num_classes: 50,
            max_refs_per_class: 10,
            base_size: 50,
            num_objects: 100_000,
            num_ref_types: 4,
            reference_type_distribution: Distribution::Uniform,
            class_reference_distribution: Distribution::Uniform,
            objects_in_classes_distribution: Distribution::Uniform,
            object_references_distribution: Distribution::Uniform,
            seed: 1,
        }
    }
}

impl DbParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 {
            return Err(Error::config("db.num_classes", "must be at least 1"));
        }
        if self.num_objects == 0 {
            return Err(Error::config("db.num_objects", "must be at least 1"));
        }
        if self.base_size == 0 {
            return Err(Error::config("db.base_size", "must be at least 1"));
        }
        if self.max_refs_per_class > 0 && self.num_ref_types == 0 {
            return Err(Error::config(
                "db.num_ref_types",
                "must be at least 1 when classes carry references",
            ));
        }
        if self.num_ref_types > u32::from(RefType::MAX) + 1 {
            return Err(Error::config(
                "db.num_ref_types",
                "at most 256 reference types",
            ));
        }
        Ok(())
    }
}

/// One typed class-level reference slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassRef {
    pub target_class: ClassId,
    pub ref_type: RefType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDescriptor {
    pub class_id: ClassId,
    pub instance_size: u32,
    pub refs: Vec<ClassRef>,
}

impl ClassDescriptor {
    pub fn ref_slots(&self) -> u32 {
        self.refs.len() as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObjectRecord {
    pub class: ClassId,
    pub size: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObjectRef {
    pub target: ObjectId,
    pub ref_type: RefType,
}

/// The generated database. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectGraph {
    seed: u64,
    num_ref_types: u32,
    classes: Vec<ClassDescriptor>,
    objects: Vec<ObjectRecord>,
    ref_offsets: Vec<u32>,
    refs: Vec<ObjectRef>,
    by_class: Vec<Vec<ObjectId>>,
}

impl ObjectGraph {
    /// Assembles a graph from parts and checks its invariants. `refs[i]` is
    /// the ordered outbound reference list of object `i`.
    pub fn from_parts(
        seed: u64,
        num_ref_types: u32,
        classes: Vec<ClassDescriptor>,
        objects: Vec<ObjectRecord>,
        refs: Vec<Vec<ObjectRef>>,
    ) -> Result<Self> {
        if objects.len() != refs.len() {
            return Err(Error::Argument(format!(
                "{} objects but {} reference lists",
                objects.len(),
                refs.len()
            )));
        }
        if objects.len() > u32::MAX as usize {
            return Err(Error::Argument("too many objects".into()));
        }
        let n = objects.len() as u64;
        let mut by_class = vec![Vec::new(); classes.len()];
        for (i, c) in classes.iter().enumerate() {
            if c.class_id as usize != i {
                return Err(Error::Argument(format!(
                    "class {i} carries id {}",
                    c.class_id
                )));
            }
        }
        let mut ref_offsets = Vec::with_capacity(objects.len() + 1);
        let mut flat = Vec::new();
        ref_offsets.push(0);
        for (id, (obj, out)) in objects.iter().zip(&refs).enumerate() {
            let class = classes.get(obj.class as usize).ok_or_else(|| {
                Error::Argument(format!("object {id} has unknown class {}", obj.class))
            })?;
            if out.len() > class.refs.len() {
                return Err(Error::Argument(format!(
                    "object {id} has {} refs but its class allows {}",
                    out.len(),
                    class.refs.len()
                )));
            }
            for r in out {
                if u64::from(r.target) >= n {
                    return Err(Error::Argument(format!(
                        "object {id} references missing object {}",
                        r.target
                    )));
                }
            }
            by_class[obj.class as usize].push(id as ObjectId);
            flat.extend_from_slice(out);
            ref_offsets.push(flat.len() as u32);
        }
        Ok(Self {
            seed,
            num_ref_types,
            classes,
            objects,
            ref_offsets,
            refs: flat,
            by_class,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_ref_types(&self) -> u32 {
        self.num_ref_types
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn num_refs(&self) -> usize {
        self.refs.len()
    }

    pub fn classes(&self) -> &[ClassDescriptor] {
        &self.classes
    }

    pub fn objects(&self) -> &[ObjectRecord] {
        &self.objects
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectRecord> {
        self.objects.get(id as usize)
    }

    pub fn class_of(&self, id: ObjectId) -> ClassId {
        self.objects[id as usize].class
    }

    pub fn size_of(&self, id: ObjectId) -> u32 {
        self.objects[id as usize].size
    }

    /// Outbound references of `id`, in slot order.
    pub fn refs(&self, id: ObjectId) -> &[ObjectRef] {
        let lo = self.ref_offsets[id as usize] as usize;
        let hi = self.ref_offsets[id as usize + 1] as usize;
        &self.refs[lo..hi]
    }

    /// Sorted ids of all instances of `class`.
    pub fn instances(&self, class: ClassId) -> &[ObjectId] {
        &self.by_class[class as usize]
    }

    pub fn total_bytes(&self) -> u64 {
        self.objects.iter().map(|o| u64::from(o.size)).sum()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        (id as usize) < self.objects.len()
    }
}

/// Relative frequency of the size multipliers 1, 2, 4, .., 32 across classes.
/// With a 50-byte base this gives sizes from 50 to 1600 bytes averaging
/// about 231 bytes.
const SIZE_MULTIPLIER_QUOTAS: [u32; 6] = [13, 13, 12, 8, 3, 1];

/// Splits `total` into parts proportional to `weights`, each part at least
/// `min_each`. Leftover units go to the largest fractional remainders, ties to
/// the lower index, so equal weights give the first `total % k` parts one
/// extra unit.
pub(crate) fn apportion(total: usize, weights: &[f64], min_each: usize) -> Vec<usize> {
    let k = weights.len();
    assert!(k > 0, "apportion over zero parts");
    assert!(total >= min_each * k, "not enough units for the minimum");
    let rest = total - min_each * k;
    let sum: f64 = weights.iter().sum();
    let mut parts = vec![min_each; k];
    if rest == 0 {
        return parts;
    }
    if sum <= 0.0 {
        // degenerate: spread evenly
        for (i, p) in parts.iter_mut().enumerate() {
            *p += rest / k + usize::from(i < rest % k);
        }
        return parts;
    }
    let mut fracs = Vec::with_capacity(k);
    let mut given = 0;
    for (i, w) in weights.iter().enumerate() {
        let quota = rest as f64 * w / sum;
        let floor = quota.floor() as usize;
        parts[i] += floor;
        given += floor;
        fracs.push((quota - floor as f64, i));
    }
    let mut left = rest.saturating_sub(given);
    fracs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in fracs.iter().cycle() {
        if left == 0 {
            break;
        }
        parts[i] += 1;
        left -= 1;
    }
    parts
}

/// Generates the database described by `params`. Deterministic in
/// `params.seed`.
pub fn generate_database(params: &DbParams) -> Result<ObjectGraph> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let nc = params.num_classes as usize;

    // Schema: sizes are stratified over the multiplier quotas, then shuffled
    // across classes.
    let quotas: Vec<f64> = SIZE_MULTIPLIER_QUOTAS
        .iter()
        .map(|&q| f64::from(q))
        .collect();
    let counts = apportion(nc, &quotas, 0);
    let mut multipliers: Vec<u32> = counts
        .iter()
        .enumerate()
        .flat_map(|(exp, &c)| std::iter::repeat_n(1u32 << exp, c))
        .collect();
    multipliers.shuffle(&mut rng);

    let mut classes = Vec::with_capacity(nc);
    for (class_id, mult) in multipliers.into_iter().enumerate() {
        let slots = rng.gen_range(0..=params.max_refs_per_class);
        let refs = (0..slots)
            .map(|_| ClassRef {
                target_class: rng.gen_range(0..params.num_classes),
                ref_type: rng.gen_range(0..params.num_ref_types) as RefType,
            })
            .collect();
        classes.push(ClassDescriptor {
            class_id: class_id as ClassId,
            instance_size: params.base_size.saturating_mul(mult),
            refs,
        });
    }

    let objects: Vec<ObjectRecord> = (0..params.num_objects)
        .map(|_| {
            let class = rng.gen_range(0..params.num_classes);
            ObjectRecord {
                class,
                size: classes[class as usize].instance_size,
            }
        })
        .collect();

    let mut by_class: Vec<Vec<ObjectId>> = vec![Vec::new(); nc];
    for (id, o) in objects.iter().enumerate() {
        by_class[o.class as usize].push(id as ObjectId);
    }

    let refs: Vec<Vec<ObjectRef>> = objects
        .iter()
        .map(|o| {
            classes[o.class as usize]
                .refs
                .iter()
                .map(|cr| {
                    let pool = &by_class[cr.target_class as usize];
                    let target = if pool.is_empty() {
                        rng.gen_range(0..params.num_objects)
                    } else {
                        pool[rng.gen_range(0..pool.len())]
                    };
                    ObjectRef {
                        target,
                        ref_type: cr.ref_type,
                    }
                })
                .collect()
        })
        .collect();

    ObjectGraph::from_parts(params.seed, params.num_ref_types, classes, objects, refs)
}

/// Depth-first pre-order traversal from `root`, following every outbound
/// reference up to `depth` edges away. Objects reachable along several paths
/// are visited once per path.
pub fn simple_traversal(graph: &ObjectGraph, root: ObjectId, depth: u32) -> Result<Vec<ObjectId>> {
    if !graph.contains(root) {
        return Err(Error::Argument(format!(
            "root {root} is not an object (database has {})",
            graph.len()
        )));
    }
    let mut out = Vec::new();
    let mut stack = vec![(root, 0u32)];
    while let Some((oid, d)) = stack.pop() {
        out.push(oid);
        if d < depth {
            for r in graph.refs(oid).iter().rev() {
                stack.push((r.target, d + 1));
            }
        }
    }
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::testutil::graph_from_adjacency;
    use super::*;

    fn small_params(seed: u64) -> DbParams {
        DbParams {
            num_objects: 2_000,
            seed,
            ..DbParams::default()
        }
    }

    #[test]
    fn rejects_zero_classes_or_objects() {
        let p = DbParams {
            num_classes: 0,
            ..DbParams::default()
        };
        assert!(generate_database(&p).unwrap_err().is_config());
        let p = DbParams {
            num_objects: 0,
            ..DbParams::default()
        };
        assert!(generate_database(&p).unwrap_err().is_config());
    }

    #[test]
    fn single_isolated_object() {
        let p = DbParams {
            num_objects: 1,
            max_refs_per_class: 0,
            ..DbParams::default()
        };
        let g = generate_database(&p).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.refs(0).is_empty());
        assert_eq!(simple_traversal(&g, 0, 5).unwrap(), vec![0]);
    }

    #[test]
    fn same_seed_same_graph() {
        let a = generate_database(&small_params(7)).unwrap();
        let b = generate_database(&small_params(7)).unwrap();
        assert_eq!(a, b);
        let c = generate_database(&small_params(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn refs_respect_class_slots_and_types() {
        let g = generate_database(&small_params(3)).unwrap();
        for id in 0..g.len() as ObjectId {
            let class = &g.classes()[g.class_of(id) as usize];
            let out = g.refs(id);
            assert!(out.len() as u32 <= class.ref_slots());
            assert!(class.ref_slots() <= 10);
            for (r, cr) in out.iter().zip(&class.refs) {
                assert!(g.contains(r.target));
                assert!(u32::from(r.ref_type) < 4);
                assert_eq!(r.ref_type, cr.ref_type);
                if !g.instances(cr.target_class).is_empty() {
                    assert_eq!(g.class_of(r.target), cr.target_class);
                }
            }
        }
    }

    #[test]
    fn by_class_is_sorted_partition() {
        let g = generate_database(&small_params(4)).unwrap();
        let mut seen = 0;
        for c in 0..g.classes().len() as ClassId {
            let inst = g.instances(c);
            assert!(inst.windows(2).all(|w| w[0] < w[1]));
            assert!(inst.iter().all(|&o| g.class_of(o) == c));
            seen += inst.len();
        }
        assert_eq!(seen, g.len());
    }

    #[test]
    fn sizes_follow_class() {
        let g = generate_database(&small_params(5)).unwrap();
        for o in g.objects() {
            assert_eq!(o.size, g.classes()[o.class as usize].instance_size);
            assert!((50..=1600).contains(&o.size));
        }
    }

    #[test]
    fn class_size_multipliers_are_stratified() {
        let g = generate_database(&DbParams {
            num_objects: 10,
            ..DbParams::default()
        })
        .unwrap();
        let mut mults: Vec<u32> = g.classes().iter().map(|c| c.instance_size / 50).collect();
        mults.sort_unstable();
        let mut expected = Vec::new();
        for (exp, &q) in SIZE_MULTIPLIER_QUOTAS.iter().enumerate() {
            expected.extend(std::iter::repeat_n(1u32 << exp, q as usize));
        }
        assert_eq!(mults, expected);
    }

    #[test]
    fn traversal_depth_zero_is_root() {
        let g = graph_from_adjacency(&[10, 10], &[vec![1], vec![]]);
        assert_eq!(simple_traversal(&g, 1, 0).unwrap(), vec![1]);
        assert_eq!(simple_traversal(&g, 0, 0).unwrap(), vec![0]);
    }

    // Recursive reference DFS used as the oracle for the iterative one.
    fn dfs_oracle(g: &ObjectGraph, at: ObjectId, depth: u32, out: &mut Vec<ObjectId>) {
        out.push(at);
        if depth == 0 {
            return;
        }
        for r in g.refs(at) {
            dfs_oracle(g, r.target, depth - 1, out);
        }
    }

    #[test]
    fn traversal_small_graph() {
        // r=0 -> {a=1, b=2}, a -> {c=3}
        let g = graph_from_adjacency(&[1; 4], &[vec![1, 2], vec![3], vec![], vec![]]);
        assert_eq!(simple_traversal(&g, 0, 2).unwrap(), vec![0, 1, 3, 2]);
        let mut oracle = Vec::new();
        dfs_oracle(&g, 0, 2, &mut oracle);
        assert_eq!(oracle, vec![0, 1, 3, 2]);
    }

    #[test]
    fn traversal_cycles_are_cut_by_depth() {
        let g = graph_from_adjacency(&[1; 2], &[vec![1, 0], vec![0]]);
        // 0 -> 1 -> 0, 0 -> 0 -> {1, 0}
        assert_eq!(simple_traversal(&g, 0, 2).unwrap(), vec![0, 1, 0, 0, 1, 0]);
    }

    #[test]
    fn traversal_matches_recursive_oracle_on_generated_graph() {
        let g = generate_database(&small_params(9)).unwrap();
        for root in (0..g.len() as ObjectId).step_by(97) {
            for depth in 0..4 {
                let mut oracle = Vec::new();
                dfs_oracle(&g, root, depth, &mut oracle);
                assert_eq!(simple_traversal(&g, root, depth).unwrap(), oracle);
            }
            assert!(simple_traversal(&g, root, 2).unwrap().len() <= 111);
        }
    }

    #[test]
    fn traversal_rejects_bad_root() {
        let g = graph_from_adjacency(&[1], &[vec![]]);
        assert!(matches!(
            simple_traversal(&g, 1, 2),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn apportion_equal_weights_spreads_remainder_first() {
        assert_eq!(apportion(10, &[1.0; 3], 0), vec![4, 3, 3]);
        assert_eq!(
            apportion(100_000, &[1.0; 333], 0)
                .iter()
                .filter(|&&c| c == 301)
                .count(),
            100
        );
        assert_eq!(apportion(3, &[0.1, 0.1, 0.8], 1), vec![1, 1, 1]);
        assert_eq!(apportion(10, &[0.1, 0.1, 0.8], 0), vec![1, 1, 8]);
        assert_eq!(apportion(5, &[0.0, 0.0], 1), vec![3, 2]);
    }
}
