//! Ego-centered automorphisms of a template and the orbit partition they induce.

use itertools::Itertools;
use serde::Serialize;

use crate::templates::{AnchoredTemplate, ANCHOR};

/// A permutation of template nodes; `perm[i]` is the image of node `i`.
pub type Permutation = Vec<usize>;

/// All anchor-fixing permutations that preserve the (directed) edge set, identity first.
pub fn ego_automorphisms(t: &AnchoredTemplate) -> Vec<Permutation> {
    let n = t.num_nodes();
    (1..n)
        .permutations(n - 1)
        .map(|tail| {
            let mut perm = Vec::with_capacity(n);
            perm.push(ANCHOR);
            perm.extend(tail);
            perm
        })
        .filter(|perm| {
            t.edges()
                .iter()
                .all(|&(i, j)| t.has_edge(perm[i], perm[j]))
        })
        .collect()
}

/// Partition of a template's nodes into ego-automorphism orbits.
///
/// Orbits are numbered by their smallest member, so orbit `0` is always `{anchor}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitPartition {
    orbit_of: Vec<usize>,
    num_orbits: usize,
    group_size: usize,
}

impl OrbitPartition {
    pub fn of(t: &AnchoredTemplate) -> Self {
        let autos = ego_automorphisms(t);
        let n = t.num_nodes();
        let mut orbit_of = vec![usize::MAX; n];
        let mut num_orbits = 0;
        for i in 0..n {
            if orbit_of[i] != usize::MAX {
                continue;
            }
            for perm in &autos {
                orbit_of[perm[i]] = num_orbits;
            }
            num_orbits += 1;
        }
        Self {
            orbit_of,
            num_orbits,
            group_size: autos.len(),
        }
    }

    pub fn orbit_of(&self, node: usize) -> usize {
        self.orbit_of[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.orbit_of
    }

    pub fn num_orbits(&self) -> usize {
        self.num_orbits
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    /// Orbit members in ascending order, one list per orbit.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_orbits];
        for (node, &o) in self.orbit_of.iter().enumerate() {
            out[o].push(node);
        }
        out
    }

    pub fn report(&self) -> OrbitReport {
        OrbitReport {
            orbits: self.orbits(),
            group_size: self.group_size,
        }
    }
}

pub fn orbit_partition(t: &AnchoredTemplate) -> OrbitPartition {
    OrbitPartition::of(t)
}

/// JSON shape printed by the `orbits` subcommand.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OrbitReport {
    pub orbits: Vec<Vec<usize>>,
    pub group_size: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates::catalogue::*;

    #[test]
    fn triangle_group() {
        let autos = ego_automorphisms(&s3());
        assert_eq!(autos, vec![vec![0, 1, 2], vec![0, 2, 1]]);
        let p = orbit_partition(&s3());
        assert_eq!(p.orbits(), vec![vec![0], vec![1, 2]]);
        assert_eq!(p.group_size(), 2);
    }

    #[test]
    fn end_anchored_path_is_rigid() {
        assert_eq!(ego_automorphisms(&s2()), vec![vec![0, 1, 2]]);
        assert_eq!(orbit_partition(&s2()).num_orbits(), 3);
    }

    #[test]
    fn four_clique_group() {
        assert_eq!(ego_automorphisms(&s5()).len(), 6);
        assert_eq!(orbit_partition(&s5()).orbits(), vec![vec![0], vec![1, 2, 3]]);
    }

    #[test]
    fn tailed_triangle_and_from_to() {
        assert_eq!(
            orbit_partition(&s6()).orbits(),
            vec![vec![0], vec![1, 2], vec![3]]
        );
        assert_eq!(
            orbit_partition(&s10()).orbits(),
            vec![vec![0], vec![1], vec![2]]
        );
    }

    #[test]
    fn s11_variants() {
        assert_eq!(orbit_partition(&s11()).orbits(), vec![vec![0], vec![1, 2]]);
        assert_eq!(orbit_partition(&s11_cyclic()).num_orbits(), 3);
    }

    #[test]
    fn report_json() {
        let json = serde_json::to_string(&orbit_partition(&s3()).report()).unwrap();
        assert_eq!(json, r#"{"orbits":[[0],[1,2]],"group_size":2}"#);
    }
}
