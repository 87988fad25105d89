//! Reference implementations for the integration tests. Each one is written
//! from the definitions alone, without sharing code paths with the library:
//! brute-force matching over dense adjacency, exhaustive orbit enumeration,
//! color refinement and central finite differences.

#![allow(dead_code, clippy::needless_range_loop)]

use egoae::graph::{Graph, LabelVector, NodeId};
use egoae::matcher::EgoAeIndex;
use egoae::model::{GrapeModel, Mode, Params};
use egoae::templates::{AnchoredTemplate, Mutation};
use ndarray::Array2;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Dense adjacency `a[u][v]`, symmetric for undirected graphs.
pub fn adjacency(n: usize, edges: &[(usize, usize)], directed: bool) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; n]; n];
    for &(u, v) in edges {
        a[u][v] = true;
        if !directed {
            a[v][u] = true;
        }
    }
    a
}

pub fn graph_adjacency(g: &Graph) -> Vec<Vec<bool>> {
    adjacency(g.num_nodes(), g.edges(), g.is_directed())
}

fn template_adjacency(t: &AnchoredTemplate) -> Vec<Vec<bool>> {
    adjacency(t.num_nodes(), t.edges(), t.is_directed())
}

/// Every injective map `f` with `f(0) = ego` that carries each template arc
/// onto a graph arc, in lexicographic order.
pub fn naive_matches(adj: &[Vec<bool>], t: &AnchoredTemplate, ego: NodeId) -> Vec<Vec<NodeId>> {
    let tadj = template_adjacency(t);
    let k = t.num_nodes();
    let n = adj.len();
    let mut out = Vec::new();
    let mut f = vec![ego];
    let mut used = vec![false; n];
    used[ego] = true;

    fn rec(
        adj: &[Vec<bool>],
        tadj: &[Vec<bool>],
        k: usize,
        f: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let i = f.len();
        if i == k {
            out.push(f.clone());
            return;
        }
        for v in 0..adj.len() {
            if used[v] {
                continue;
            }
            let ok = (0..i).all(|j| (!tadj[j][i] || adj[f[j]][v]) && (!tadj[i][j] || adj[v][f[j]]));
            if ok {
                used[v] = true;
                f.push(v);
                rec(adj, tadj, k, f, used, out);
                f.pop();
                used[v] = false;
            }
        }
    }

    rec(adj, &tadj, k, &mut f, &mut used, &mut out);
    out.sort();
    out
}

/// All permutations of `0..n` that fix 0.
pub fn anchor_fixing_permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut vec![0], &mut (1..n).collect(), &mut out);
    out
}

/// Anchor-fixing automorphisms found by testing every permutation.
pub fn naive_automorphisms(t: &AnchoredTemplate) -> Vec<Vec<usize>> {
    let a = template_adjacency(t);
    let n = t.num_nodes();
    anchor_fixing_permutations(n)
        .into_iter()
        .filter(|p| (0..n).all(|i| (0..n).all(|j| a[i][j] == a[p[i]][p[j]])))
        .collect()
}

/// Orbits of the anchor-fixing automorphism group, each sorted, ordered by
/// smallest member.
pub fn naive_orbits(t: &AnchoredTemplate) -> Vec<Vec<usize>> {
    let autos = naive_automorphisms(t);
    let mut orbits: BTreeSet<Vec<usize>> = BTreeSet::new();
    for u in 0..t.num_nodes() {
        let orbit: BTreeSet<usize> = autos.iter().map(|p| p[u]).collect();
        orbits.insert(orbit.into_iter().collect());
    }
    orbits.into_iter().collect()
}

/// Union-mode Ego-AE sets from a list of matches; an ego with no match keeps
/// only itself in the anchor's set.
pub fn naive_ae_sets(matches: &[Vec<usize>], orbits: &[Vec<usize>], ego: NodeId) -> Vec<Vec<usize>> {
    if matches.is_empty() {
        let mut sets = vec![Vec::new(); orbits.len()];
        sets[0].push(ego);
        return sets;
    }
    orbits
        .iter()
        .map(|orbit| {
            let set: BTreeSet<usize> = matches.iter().flat_map(|m| orbit.iter().map(|&u| m[u])).collect();
            set.into_iter().collect()
        })
        .collect()
}

/// Compares an index against the brute-force oracle at every ego; returns a
/// description of the first difference.
pub fn check_index(g: &Graph, idx: &EgoAeIndex) -> Result<(), String> {
    let adj = graph_adjacency(g);
    let t = idx.template();
    let orbits = naive_orbits(t);
    for ego in 0..g.num_nodes() {
        let expected = naive_matches(&adj, t, ego);
        let got = idx.matches(ego).to_vecs();
        if got != expected {
            return Err(format!(
                "template {t}, ego {ego}: {} matches vs {} expected",
                got.len(),
                expected.len()
            ));
        }
        let sets = naive_ae_sets(&expected, &orbits, ego);
        if idx.ae_sets(ego) != sets.as_slice() {
            return Err(format!("template {t}, ego {ego}: Ego-AE sets differ"));
        }
    }
    Ok(())
}

/// 1-WL color refinement from a uniform start, iterated to a fixed point.
pub fn wl_colors(g: &Graph) -> Vec<usize> {
    let adj = graph_adjacency(&g.symmetrized());
    let n = g.num_nodes();
    let mut colors = vec![0usize; n];
    loop {
        let signatures: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<usize> = (0..n).filter(|&u| adj[v][u]).map(|u| colors[u]).collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let palette: BTreeMap<&(usize, Vec<usize>), usize> = signatures
            .iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let next: Vec<usize> = signatures.iter().map(|s| palette[s]).collect();
        let before = colors.iter().collect::<BTreeSet<_>>().len();
        let after = next.iter().collect::<BTreeSet<_>>().len();
        colors = next;
        if after == before {
            return colors;
        }
    }
}

/// A random connected template: every new node hangs off an earlier one, then
/// each remaining pair is joined with probability `extra`.
pub fn random_template(rng: &mut impl Rng, max_nodes: usize, directed: bool, extra: f64) -> AnchoredTemplate {
    let n = rng.random_range(2..=max_nodes);
    let mut a = vec![vec![false; n]; n];
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let e = if directed && rng.random_bool(0.5) { (i, j) } else { (j, i) };
        a[e.0][e.1] = true;
        edges.push(e);
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || a[i][j] || a[j][i] || (!directed && j < i) {
                continue;
            }
            if rng.random_bool(extra) {
                a[i][j] = true;
                edges.push((i, j));
            }
        }
    }
    AnchoredTemplate::with_cap(n, &edges, directed, max_nodes).expect("connected by construction")
}

/// A uniformly chosen legal mutation under `cap`, if any exists.
pub fn random_mutation(t: &AnchoredTemplate, rng: &mut impl Rng, cap: usize) -> Option<Mutation> {
    let mut options = t.edge_mutations();
    if t.num_nodes() < cap {
        options.extend(t.node_mutations());
    }
    if options.is_empty() {
        None
    } else {
        Some(options[rng.random_range(0..options.len())])
    }
}

/// Largest relative gap between analytic gradients and central differences
/// of the loss, over every scalar parameter. The denominator is
/// `max(|analytic|, |numeric|, 1e-6)`.
pub fn max_gradient_error(
    model: &GrapeModel,
    indices: &[EgoAeIndex],
    x: &Array2<f64>,
    labels: &LabelVector,
    train: &[NodeId],
    eps: f64,
) -> f64 {
    let trace = model.forward(indices, x, Mode::Eval).unwrap();
    let (_, grads) = model.loss_and_gradients(&trace, indices, x, labels, train).unwrap();
    let analytic: Vec<f64> = grads.tensors().into_iter().flat_map(|(_, _, v)| v).collect();
    let loss_at = |params: &Params| {
        let mut m = model.clone();
        m.params = params.clone();
        let t = m.forward(indices, x, Mode::Eval).unwrap();
        m.loss(&t, labels, train)
    };
    let lens: Vec<usize> = model.params.tensors().iter().map(|(_, _, v)| v.len()).collect();
    let mut worst: f64 = 0.0;
    let mut flat = 0;
    for (t, len) in lens.into_iter().enumerate() {
        for i in 0..len {
            let mut plus = model.params.clone();
            plus.tensors_mut()[t].2[i] += eps;
            let mut minus = model.params.clone();
            minus.tensors_mut()[t].2[i] -= eps;
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps);
            let a = analytic[flat];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
            flat += 1;
        }
    }
    worst
}

/// The worked directed example: nine nodes (node 0 isolated so that the
/// remaining ids read 1..8), a directed 4-cycle template and its two
/// matches at node 1.
pub struct WorkedExample {
    pub graph: Graph,
    pub template: AnchoredTemplate,
    pub ego: NodeId,
    pub parent_matches: Vec<Vec<usize>>,
    /// New node hung off template node 3 by an outgoing arc.
    pub node_mutation: Mutation,
    pub node_child_matches: Vec<Vec<usize>>,
    /// Arc from template node 1 to template node 2.
    pub edge_mutation: Mutation,
    pub edge_child_matches: Vec<Vec<usize>>,
}

pub fn worked_example() -> WorkedExample {
    let edges = [(1, 2), (2, 4), (4, 3), (3, 1), (1, 3), (3, 6), (6, 7), (7, 1), (4, 8), (2, 3)];
    WorkedExample {
        graph: Graph::new(9, &edges, true),
        template: AnchoredTemplate::new(4, &[(0, 1), (1, 3), (3, 2), (2, 0)], true).unwrap(),
        ego: 1,
        parent_matches: vec![vec![1, 2, 3, 4], vec![1, 3, 7, 6]],
        node_mutation: Mutation::AddNode { attach_to: 3, outward: true },
        node_child_matches: vec![vec![1, 2, 3, 4, 8]],
        edge_mutation: Mutation::AddEdge { from: 1, to: 2 },
        edge_child_matches: vec![vec![1, 2, 3, 4]],
    }
}
