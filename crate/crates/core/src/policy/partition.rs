//! Greedy graph partitioning and page packing.

use crate::objectbase::ObjectId;

struct Dsu {
    parent: Vec<usize>,
    bytes: Vec<u64>,
}

impl Dsu {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Greedy partitioning: edges in descending weight order merge the clusters
/// of their endpoints when the merged cluster still fits in `capacity`
/// bytes. Objects without edges stay singletons. `edges` must already be
/// sorted heaviest first; endpoints outside `objects` are ignored.
pub fn greedy_partition(
    objects: &[ObjectId],
    size_of: impl Fn(ObjectId) -> u32,
    edges: &[(ObjectId, ObjectId, f64)],
    capacity: u32,
) -> Vec<Vec<ObjectId>> {
    let index: std::collections::HashMap<ObjectId, usize> =
        objects.iter().enumerate().map(|(i, &o)| (o, i)).collect();
    let mut dsu = Dsu {
        parent: (0..objects.len()).collect(),
        bytes: objects.iter().map(|&o| u64::from(size_of(o))).collect(),
    };
    for &(a, b, _) in edges {
        let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) else {
            continue;
        };
        let (ra, rb) = (dsu.find(ia), dsu.find(ib));
        if ra == rb {
            continue;
        }
        let merged = dsu.bytes[ra] + dsu.bytes[rb];
        if merged <= u64::from(capacity) {
            let (keep, gone) = if ra < rb { (ra, rb) } else { (rb, ra) };
            dsu.parent[gone] = keep;
            dsu.bytes[keep] = merged;
        }
    }
    let mut clusters: Vec<Vec<ObjectId>> = Vec::new();
    let mut slot = vec![usize::MAX; objects.len()];
    for i in 0..objects.len() {
        let r = dsu.find(i);
        if slot[r] == usize::MAX {
            slot[r] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[r]].push(objects[i]);
    }
    clusters
}

/// Next-fit packing of groups into bins of `capacity` bytes, preserving
/// order. A group never spans bins; groups larger than a bin are split
/// object by object.
pub fn pack_next_fit(
    groups: &[Vec<ObjectId>],
    size_of: impl Fn(ObjectId) -> u32,
    capacity: u32,
) -> Vec<Vec<ObjectId>> {
    let mut bins: Vec<Vec<ObjectId>> = Vec::new();
    let mut used = u64::from(capacity) + 1;
    let cap = u64::from(capacity);
    for g in groups {
        let bytes: u64 = g.iter().map(|&o| u64::from(size_of(o))).sum();
        if bytes <= cap {
            if used + bytes > cap {
                bins.push(Vec::new());
                used = 0;
            }
            bins.last_mut().unwrap().extend_from_slice(g);
            used += bytes;
        } else {
            for &o in g {
                let s = u64::from(size_of(o));
                if used + s > cap {
                    bins.push(Vec::new());
                    used = 0;
                }
                bins.last_mut().unwrap().push(o);
                used += s;
            }
        }
    }
    bins
}
