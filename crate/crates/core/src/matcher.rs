//! Ego-anchored template matching and Ego-AE set construction.
//!
//! Matching is subgraph monomorphism: a match is an injective map from
//! template nodes to graph nodes that sends the anchor to the ego and every
//! template edge onto a graph edge. Extra graph edges among matched nodes are
//! allowed, which is what makes edge mutations act as a pure filter on the
//! parent's matches.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::MatchError;
use crate::graph::{Graph, NodeId};
use crate::orbits::OrbitPartition;
use crate::templates::{AnchoredTemplate, Mutation, ANCHOR};

pub const DEFAULT_MAX_MATCHES_PER_EGO: usize = 10_000;

/// How matched nodes are pooled into Ego-AE sets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AeSetMode {
    /// Each node at most once per orbit.
    #[default]
    Union,
    /// A node is repeated once per match in which it plays the orbit's role.
    Multiset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOptions {
    pub max_matches_per_ego: usize,
    pub ae_mode: AeSetMode,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            max_matches_per_ego: DEFAULT_MAX_MATCHES_PER_EGO,
            ae_mode: AeSetMode::Union,
        }
    }
}

impl MatchOptions {
    pub fn unlimited() -> Self {
        Self {
            max_matches_per_ego: usize::MAX,
            ..Self::default()
        }
    }
}

/// Work counters, summed over egos.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MatchCounters {
    /// Candidate graph nodes examined for a template node.
    pub candidate_expansions: u64,
    /// Partial assignments accepted during backtracking (search-tree nodes).
    pub node_visits: u64,
    /// Egos whose match list hit the per-ego cap.
    pub truncated_egos: usize,
}

impl std::ops::AddAssign for MatchCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.candidate_expansions += rhs.candidate_expansions;
        self.node_visits += rhs.node_visits;
        self.truncated_egos += rhs.truncated_egos;
    }
}

/// Matches of one template at one ego, stored row-major and sorted lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchList {
    width: usize,
    flat: Vec<NodeId>,
}

impl MatchList {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            flat: Vec::new(),
        }
    }

    /// Builds a list from arbitrary mappings, sorting them.
    pub fn from_mappings(width: usize, mappings: impl IntoIterator<Item = Vec<NodeId>>) -> Self {
        let mut list = Self::new(width);
        for m in mappings {
            assert_eq!(m.len(), width);
            list.flat.extend(m);
        }
        list.sort();
        list
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.flat.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn get(&self, i: usize) -> &[NodeId] {
        &self.flat[i * self.width..(i + 1) * self.width]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[NodeId]> + '_ {
        self.flat.chunks_exact(self.width.max(1))
    }

    pub fn to_vecs(&self) -> Vec<Vec<NodeId>> {
        self.iter().map(<[NodeId]>::to_vec).collect()
    }

    fn push(&mut self, mapping: &[NodeId]) {
        debug_assert_eq!(mapping.len(), self.width);
        self.flat.extend_from_slice(mapping);
    }

    fn sort(&mut self) {
        let w = self.width;
        if w == 0 || self.flat.len() <= w {
            return;
        }
        let mut rows: Vec<&[NodeId]> = self.flat.chunks_exact(w).collect();
        rows.sort_unstable();
        self.flat = rows.concat();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Via {
    /// Candidates are out-neighbors of the pivot's image (all neighbors when undirected).
    Out,
    /// Candidates are in-neighbors of the pivot's image.
    In,
}

/// Extra arc constraints checked once a candidate is proposed.
#[derive(Debug, Clone, Copy)]
struct Check {
    other: usize,
    /// `true`: arc other -> node; `false`: arc node -> other.
    into_node: bool,
}

#[derive(Debug, Clone)]
struct Step {
    node: usize,
    pivot: usize,
    via: Via,
    checks: Vec<Check>,
}

/// A connectivity-respecting order over template nodes: each step's node is
/// adjacent to an already placed one.
#[derive(Debug, Clone)]
struct Plan {
    width: usize,
    steps: Vec<Step>,
}

impl Plan {
    fn new(t: &AnchoredTemplate) -> Self {
        let n = t.num_nodes();
        let mut placed = vec![ANCHOR];
        let mut is_placed = vec![false; n];
        is_placed[ANCHOR] = true;
        let mut steps = Vec::with_capacity(n - 1);
        while placed.len() < n {
            // Most constrained next: the unplaced node with the most placed neighbors.
            let node = (0..n)
                .filter(|&v| !is_placed[v])
                .max_by_key(|&v| {
                    let links = placed.iter().filter(|&&p| t.adjacent(p, v)).count();
                    (links, std::cmp::Reverse(v))
                })
                .expect("unplaced node exists");
            let pivot = *placed
                .iter()
                .find(|&&p| t.adjacent(p, node))
                .expect("templates are connected");
            let via = if !t.is_directed() || t.has_edge(pivot, node) {
                Via::Out
            } else {
                Via::In
            };
            let mut checks = Vec::new();
            for &p in &placed {
                if t.has_edge(p, node) && !(p == pivot && via == Via::Out) {
                    checks.push(Check {
                        other: p,
                        into_node: true,
                    });
                }
                if t.is_directed() && t.has_edge(node, p) && !(p == pivot && via == Via::In) {
                    checks.push(Check {
                        other: p,
                        into_node: false,
                    });
                }
            }
            steps.push(Step {
                node,
                pivot,
                via,
                checks,
            });
            placed.push(node);
            is_placed[node] = true;
        }
        Self { width: n, steps }
    }
}

fn check_direction(g: &Graph, t: &AnchoredTemplate) -> Result<(), MatchError> {
    if g.is_directed() && !t.is_directed() {
        Err(MatchError::DirectionMismatch)
    } else {
        Ok(())
    }
}

struct Search<'a> {
    g: &'a Graph,
    plan: &'a Plan,
    mapping: Vec<NodeId>,
    out: MatchList,
    cap: usize,
    counters: MatchCounters,
    truncated: bool,
}

impl Search<'_> {
    fn run(&mut self, depth: usize) {
        if depth == self.plan.steps.len() {
            if self.out.len() >= self.cap {
                self.truncated = true;
                return;
            }
            self.out.push(&self.mapping);
            return;
        }
        let step = &self.plan.steps[depth];
        let anchor_img = self.mapping[step.pivot];
        let candidates = match step.via {
            Via::Out => self.g.out_neighbors(anchor_img),
            Via::In => self.g.in_neighbors(anchor_img),
        };
        for &w in candidates {
            if self.truncated {
                return;
            }
            self.counters.candidate_expansions += 1;
            // Injectivity: w must not already be used by a placed template node.
            if self.plan.steps[..depth]
                .iter()
                .any(|s| self.mapping[s.node] == w)
                || self.mapping[ANCHOR] == w
            {
                continue;
            }
            let consistent = step.checks.iter().all(|c| {
                let o = self.mapping[c.other];
                if c.into_node {
                    self.g.has_edge(o, w)
                } else {
                    self.g.has_edge(w, o)
                }
            });
            if !consistent {
                continue;
            }
            self.counters.node_visits += 1;
            self.mapping[step.node] = w;
            self.run(depth + 1);
        }
    }
}

fn match_with_plan(
    g: &Graph,
    plan: &Plan,
    ego: NodeId,
    cap: usize,
) -> (MatchList, MatchCounters) {
    let mut mapping = vec![usize::MAX; plan.width];
    mapping[ANCHOR] = ego;
    let mut search = Search {
        g,
        plan,
        mapping,
        out: MatchList::new(plan.width),
        cap,
        counters: MatchCounters {
            node_visits: 1,
            ..Default::default()
        },
        truncated: false,
    };
    search.run(0);
    if search.truncated {
        search.counters.truncated_egos = 1;
    }
    search.out.sort();
    (search.out, search.counters)
}

/// All matches of `t` anchored at `ego`, in lexicographic order of the mapping.
pub fn match_template(
    g: &Graph,
    t: &AnchoredTemplate,
    ego: NodeId,
) -> Result<MatchList, MatchError> {
    match_template_with(g, t, ego, usize::MAX).map(|(m, _)| m)
}

/// Like [`match_template`] with a per-ego cap; also returns work counters.
pub fn match_template_with(
    g: &Graph,
    t: &AnchoredTemplate,
    ego: NodeId,
    cap: usize,
) -> Result<(MatchList, MatchCounters), MatchError> {
    if ego >= g.num_nodes() {
        return Err(MatchError::EgoOutOfRange {
            ego,
            num_nodes: g.num_nodes(),
        });
    }
    check_direction(g, t)?;
    Ok(match_with_plan(g, &Plan::new(t), ego, cap))
}

/// Matches and Ego-AE sets of one template for every ego in a graph.
#[derive(Debug, Clone)]
pub struct EgoAeIndex {
    template: AnchoredTemplate,
    partition: OrbitPartition,
    mode: AeSetMode,
    matches: Vec<MatchList>,
    ae_sets: Vec<Vec<Vec<NodeId>>>,
    counters: MatchCounters,
}

/// Equality of content: template, matches and sets. Work counters are ignored.
impl PartialEq for EgoAeIndex {
    fn eq(&self, other: &Self) -> bool {
        self.template == other.template
            && self.mode == other.mode
            && self.matches == other.matches
            && self.ae_sets == other.ae_sets
    }
}

fn ae_sets_for(
    ego: NodeId,
    matches: &MatchList,
    partition: &OrbitPartition,
    mode: AeSetMode,
) -> Vec<Vec<NodeId>> {
    let mut sets = vec![Vec::new(); partition.num_orbits()];
    if matches.is_empty() {
        sets[0].push(ego);
        return sets;
    }
    for m in matches.iter() {
        for (i, &v) in m.iter().enumerate() {
            sets[partition.orbit_of(i)].push(v);
        }
    }
    for set in &mut sets {
        set.sort_unstable();
        if mode == AeSetMode::Union {
            set.dedup();
        }
    }
    sets
}

#[cfg(feature = "parallel")]
fn per_ego<T: Send>(n: usize, f: impl Fn(NodeId) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn per_ego<T: Send>(n: usize, f: impl Fn(NodeId) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}

impl EgoAeIndex {
    fn assemble(
        template: AnchoredTemplate,
        mode: AeSetMode,
        per_ego_results: Vec<(MatchList, MatchCounters)>,
    ) -> Self {
        let partition = OrbitPartition::of(&template);
        let mut counters = MatchCounters::default();
        let mut matches = Vec::with_capacity(per_ego_results.len());
        for (m, c) in per_ego_results {
            counters += c;
            matches.push(m);
        }
        let ae_sets = per_ego(matches.len(), |v| {
            ae_sets_for(v, &matches[v], &partition, mode)
        });
        if counters.truncated_egos > 0 {
            log::warn!(
                "template {template}: match lists truncated at {} egos",
                counters.truncated_egos
            );
        }
        Self {
            template,
            partition,
            mode,
            matches,
            ae_sets,
            counters,
        }
    }

    /// Assembles an index from explicit parts; each ego's orbit sets are sorted.
    /// Intended for tests and for callers that build sets by other means.
    pub fn from_parts(
        template: AnchoredTemplate,
        matches: Vec<MatchList>,
        mut ae_sets: Vec<Vec<Vec<NodeId>>>,
    ) -> Self {
        let partition = OrbitPartition::of(&template);
        for per_orbit in &mut ae_sets {
            assert_eq!(per_orbit.len(), partition.num_orbits());
            for set in per_orbit {
                set.sort_unstable();
            }
        }
        Self {
            template,
            partition,
            mode: AeSetMode::Union,
            matches,
            ae_sets,
            counters: MatchCounters::default(),
        }
    }

    pub fn template(&self) -> &AnchoredTemplate {
        &self.template
    }

    pub fn partition(&self) -> &OrbitPartition {
        &self.partition
    }

    pub fn num_orbits(&self) -> usize {
        self.partition.num_orbits()
    }

    pub fn num_nodes(&self) -> usize {
        self.matches.len()
    }

    pub fn mode(&self) -> AeSetMode {
        self.mode
    }

    pub fn matches(&self, ego: NodeId) -> &MatchList {
        &self.matches[ego]
    }

    /// `A_j(ego)` for every orbit `j`, each sorted ascending.
    pub fn ae_sets(&self, ego: NodeId) -> &[Vec<NodeId>] {
        &self.ae_sets[ego]
    }

    pub fn counters(&self) -> MatchCounters {
        self.counters
    }

    pub fn total_matches(&self) -> usize {
        self.matches.iter().map(MatchList::len).sum()
    }

    /// The same matches under a relabeled template (`perm[old] = new`).
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let template = self.template.relabel(perm);
        let width = template.num_nodes();
        let results = self
            .matches
            .iter()
            .map(|list| {
                let mut out = MatchList::new(width);
                let mut row = vec![0; width];
                for m in list.iter() {
                    for (old, &v) in m.iter().enumerate() {
                        row[perm[old]] = v;
                    }
                    out.push(&row);
                }
                out.sort();
                (out, MatchCounters::default())
            })
            .collect();
        let mut idx = Self::assemble(template, self.mode, results);
        idx.counters = self.counters;
        idx
    }
}

/// Matches `t` at every ego.
pub fn build_index(
    g: &Graph,
    t: &AnchoredTemplate,
    opts: &MatchOptions,
) -> Result<EgoAeIndex, MatchError> {
    check_direction(g, t)?;
    let plan = Plan::new(t);
    let results = per_ego(g.num_nodes(), |ego| {
        match_with_plan(g, &plan, ego, opts.max_matches_per_ego)
    });
    Ok(EgoAeIndex::assemble(t.clone(), opts.ae_mode, results))
}

fn shape_err(msg: impl Into<String>) -> MatchError {
    MatchError::ShapeMismatch(msg.into())
}

/// Child index for a node mutation, found by extending every parent match
/// with the unused neighbors of the image of `attach_at`.
pub fn extend_node_mutation(
    g: &Graph,
    parent: &EgoAeIndex,
    child: &AnchoredTemplate,
    attach_at: usize,
) -> Result<EgoAeIndex, MatchError> {
    extend_node_mutation_with(g, parent, child, attach_at, &MatchOptions::default())
}

pub fn extend_node_mutation_with(
    g: &Graph,
    parent: &EgoAeIndex,
    child: &AnchoredTemplate,
    attach_at: usize,
    opts: &MatchOptions,
) -> Result<EgoAeIndex, MatchError> {
    check_direction(g, child)?;
    let p = parent.template();
    let new = p.num_nodes();
    if child.num_nodes() != new + 1 || child.is_directed() != p.is_directed() {
        return Err(shape_err("node count or directedness differs"));
    }
    if attach_at >= new {
        return Err(shape_err(format!("attach point {attach_at} outside parent")));
    }
    let outward = child.has_edge(attach_at, new);
    let mutation = Mutation::AddNode {
        attach_to: attach_at,
        outward: !p.is_directed() || outward,
    };
    if p.apply(&mutation, usize::MAX).ok().as_ref() != Some(child) {
        return Err(shape_err(format!(
            "{child} is not {p} plus a node attached to {attach_at}"
        )));
    }
    let via = if mutation == (Mutation::AddNode { attach_to: attach_at, outward: true }) {
        Via::Out
    } else {
        Via::In
    };
    let cap = opts.max_matches_per_ego;
    let results = per_ego(g.num_nodes(), |ego| {
        let mut out = MatchList::new(new + 1);
        let mut counters = MatchCounters::default();
        let mut row = vec![0; new + 1];
        'matches: for m in parent.matches(ego).iter() {
            let pivot = m[attach_at];
            let candidates = match via {
                Via::Out => g.out_neighbors(pivot),
                Via::In => g.in_neighbors(pivot),
            };
            for &w in candidates {
                counters.candidate_expansions += 1;
                if m.contains(&w) {
                    continue;
                }
                if out.len() >= cap {
                    counters.truncated_egos = 1;
                    break 'matches;
                }
                row[..new].copy_from_slice(m);
                row[new] = w;
                counters.node_visits += 1;
                out.push(&row);
            }
        }
        // Parent rows are sorted and w ascends within each, so `out` is sorted.
        (out, counters)
    });
    Ok(EgoAeIndex::assemble(child.clone(), parent.mode(), results))
}

/// Child index for an edge mutation: the parent matches whose images of
/// `new_edge` are joined in the graph.
pub fn filter_edge_mutation(
    g: &Graph,
    parent: &EgoAeIndex,
    child: &AnchoredTemplate,
    new_edge: (usize, usize),
) -> Result<EgoAeIndex, MatchError> {
    check_direction(g, child)?;
    let p = parent.template();
    let (i, j) = new_edge;
    let mutation = Mutation::AddEdge { from: i, to: j };
    if p.apply(&mutation, usize::MAX).ok().as_ref() != Some(child) {
        return Err(shape_err(format!(
            "{child} is not {p} plus the edge ({i}, {j})"
        )));
    }
    let results = per_ego(g.num_nodes(), |ego| {
        let parent_matches = parent.matches(ego);
        let mut out = MatchList::new(parent_matches.width());
        let mut counters = MatchCounters::default();
        for m in parent_matches.iter() {
            counters.candidate_expansions += 1;
            if g.has_edge(m[i], m[j]) {
                counters.node_visits += 1;
                out.push(m);
            }
        }
        (out, counters)
    });
    Ok(EgoAeIndex::assemble(child.clone(), parent.mode(), results))
}

/// Dispatches to [`extend_node_mutation_with`] or [`filter_edge_mutation`].
pub fn derive_index(
    g: &Graph,
    parent: &EgoAeIndex,
    mutation: &Mutation,
    opts: &MatchOptions,
) -> Result<EgoAeIndex, MatchError> {
    let child = parent
        .template()
        .apply(mutation, usize::MAX)
        .map_err(|e| shape_err(e.to_string()))?;
    match *mutation {
        Mutation::AddNode { attach_to, .. } => {
            extend_node_mutation_with(g, parent, &child, attach_to, opts)
        }
        Mutation::AddEdge { from, to } => filter_edge_mutation(g, parent, &child, (from, to)),
    }
}

/// Summary counters of an index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchStats {
    pub total_matches: usize,
    pub max_matches_per_ego: usize,
    pub egos_with_matches: usize,
    pub mean_ae_size: f64,
    pub max_ae_size: usize,
    pub candidate_expansions: u64,
    pub node_visits: u64,
    pub truncated_egos: usize,
}

pub fn match_stats(idx: &EgoAeIndex) -> MatchStats {
    let mut sizes = 0usize;
    let mut count = 0usize;
    let mut max_ae = 0usize;
    for sets in &idx.ae_sets {
        for s in sets {
            sizes += s.len();
            count += 1;
            max_ae = max_ae.max(s.len());
        }
    }
    let c = idx.counters;
    MatchStats {
        total_matches: idx.total_matches(),
        max_matches_per_ego: idx.matches.iter().map(MatchList::len).max().unwrap_or(0),
        egos_with_matches: idx.matches.iter().filter(|m| !m.is_empty()).count(),
        mean_ae_size: if count == 0 { 0.0 } else { sizes as f64 / count as f64 },
        max_ae_size: max_ae,
        candidate_expansions: c.candidate_expansions,
        node_visits: c.node_visits,
        truncated_egos: c.truncated_egos,
    }
}

/// Wall-clock helper used by callers that account matching time.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}
