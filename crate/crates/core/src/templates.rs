//! Anchored subgraph templates.
//!
//! A template is a small connected graphlet whose node `0` (the anchor) is
//! always mapped onto the ego node. Templates are either undirected or
//! directed; undirected edges are stored as `(min, max)`.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::TemplateError;

pub const DEFAULT_SIZE_CAP: usize = 6;
pub const ANCHOR: usize = 0;

#[derive(Debug, Clone, Eq, Serialize, Deserialize)]
#[serde(try_from = "TemplateJson", into = "TemplateJson")]
pub struct AnchoredTemplate {
    num_nodes: usize,
    directed: bool,
    edges: Vec<(usize, usize)>,
    name: Option<String>,
}

/// Two templates are equal when they have the same labeled structure; names are ignored.
impl PartialEq for AnchoredTemplate {
    fn eq(&self, other: &Self) -> bool {
        self.num_nodes == other.num_nodes
            && self.directed == other.directed
            && self.edges == other.edges
    }
}

impl std::hash::Hash for AnchoredTemplate {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.num_nodes.hash(state);
        self.directed.hash(state);
        self.edges.hash(state);
    }
}

/// JSON shape of a template file entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub directed: bool,
    pub num_nodes: usize,
    pub edges: Vec<[usize; 2]>,
}

impl From<AnchoredTemplate> for TemplateJson {
    fn from(t: AnchoredTemplate) -> Self {
        t.to_json()
    }
}

impl TryFrom<TemplateJson> for AnchoredTemplate {
    type Error = TemplateError;

    fn try_from(json: TemplateJson) -> Result<Self, Self::Error> {
        Self::from_json(&json, DEFAULT_SIZE_CAP)
    }
}

impl AnchoredTemplate {
    pub fn new(
        num_nodes: usize,
        edges: &[(usize, usize)],
        directed: bool,
    ) -> Result<Self, TemplateError> {
        Self::with_cap(num_nodes, edges, directed, DEFAULT_SIZE_CAP)
    }

    pub fn with_cap(
        num_nodes: usize,
        edges: &[(usize, usize)],
        directed: bool,
        cap: usize,
    ) -> Result<Self, TemplateError> {
        if num_nodes < 2 {
            return Err(TemplateError::TooSmall(num_nodes));
        }
        if num_nodes > cap {
            return Err(TemplateError::OverCap { num_nodes, cap });
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            if i >= num_nodes || j >= num_nodes {
                return Err(TemplateError::NodeOutOfRange(i, j));
            }
            if i == j {
                return Err(TemplateError::SelfLoop(i));
            }
            let e = if directed { (i, j) } else { (i.min(j), i.max(j)) };
            if normalized.contains(&e) {
                return Err(TemplateError::DuplicateEdge(i, j));
            }
            normalized.push(e);
        }
        normalized.sort_unstable();
        let t = Self {
            num_nodes,
            directed,
            edges: normalized,
            name: None,
        };
        if !t.is_connected() {
            return Err(TemplateError::Disconnected);
        }
        Ok(t)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Sorted edges; `(min, max)` pairs when undirected, arcs `(from, to)` when directed.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Arc test: `i -> j` for directed templates, `i -- j` otherwise.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let e = if self.directed { (i, j) } else { (i.min(j), i.max(j)) };
        self.edges.binary_search(&e).is_ok()
    }

    /// `true` if `i` and `j` are joined in either direction.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.has_edge(i, j) || self.has_edge(j, i)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![ANCHOR];
        seen[ANCHOR] = true;
        while let Some(u) = stack.pop() {
            for (v, flag) in seen.iter_mut().enumerate() {
                if !*flag && self.adjacent(u, v) {
                    *flag = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// `true` if the undirected skeleton contains a 3-cycle.
    pub fn contains_triangle(&self) -> bool {
        (0..self.num_nodes).tuple_combinations().any(|(a, b, c)| {
            self.adjacent(a, b) && self.adjacent(b, c) && self.adjacent(a, c)
        })
    }

    /// Relabels node `i` to `perm[i]`. `perm` must fix the anchor.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.num_nodes);
        assert_eq!(perm[ANCHOR], ANCHOR, "relabeling must fix the anchor");
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|&(i, j)| (perm[i], perm[j]))
            .collect();
        let mut t = Self::with_cap(self.num_nodes, &edges, self.directed, usize::MAX)
            .expect("relabeling preserves validity");
        t.name.clone_from(&self.name);
        t
    }

    fn encode_under(&self, order: &[usize]) -> Vec<u8> {
        // order[new] = old
        let n = self.num_nodes;
        let mut bytes = Vec::with_capacity(2 + n * n);
        bytes.push(n as u8);
        bytes.push(self.directed as u8);
        for a in 0..n {
            for b in 0..n {
                bytes.push(self.has_edge(order[a], order[b]) as u8);
            }
        }
        bytes
    }

    /// Minimum encoding over all anchor-fixing relabelings, plus the relabeling
    /// (`perm[old] = new`) that attains it.
    pub fn canonical_relabeling(&self) -> (CanonicalForm, Vec<usize>) {
        let n = self.num_nodes;
        let mut best: Option<(Vec<u8>, Vec<usize>)> = None;
        for tail in (1..n).permutations(n - 1) {
            let mut order = Vec::with_capacity(n);
            order.push(ANCHOR);
            order.extend(tail);
            let enc = self.encode_under(&order);
            if best.as_ref().is_none_or(|(b, _)| enc < *b) {
                best = Some((enc, order));
            }
        }
        let (bytes, order) = best.expect("at least one permutation");
        let mut perm = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }
        (CanonicalForm(bytes), perm)
    }

    pub fn canonical_form(&self) -> CanonicalForm {
        self.canonical_relabeling().0
    }

    /// The representative labeling whose encoding is the canonical form.
    pub fn canonicalized(&self) -> Self {
        let (_, perm) = self.canonical_relabeling();
        self.relabel(&perm)
    }

    /// Applies a mutation, checking the size cap and the "unconnected pair" rule.
    pub fn apply(&self, mutation: &Mutation, cap: usize) -> Result<Self, TemplateError> {
        let mut edges = self.edges.clone();
        let num_nodes = match *mutation {
            Mutation::AddNode { attach_to, outward } => {
                if attach_to >= self.num_nodes {
                    return Err(TemplateError::InvalidMutation(format!(
                        "attach point {attach_to} outside template"
                    )));
                }
                let new = self.num_nodes;
                edges.push(if !self.directed || outward {
                    (attach_to, new)
                } else {
                    (new, attach_to)
                });
                self.num_nodes + 1
            }
            Mutation::AddEdge { from, to } => {
                let taken = if self.directed {
                    self.has_edge(from, to)
                } else {
                    self.adjacent(from, to)
                };
                if taken {
                    return Err(TemplateError::InvalidMutation(format!(
                        "nodes {from} and {to} are already connected"
                    )));
                }
                edges.push((from, to));
                self.num_nodes
            }
        };
        let mut t = Self::with_cap(num_nodes, &edges, self.directed, cap)?;
        t.name = None;
        Ok(t)
    }

    /// Every node mutation, with both orientations for directed templates.
    pub fn node_mutations(&self) -> Vec<Mutation> {
        let orientations: &[bool] = if self.directed { &[true, false] } else { &[true] };
        (0..self.num_nodes)
            .flat_map(|a| {
                orientations.iter().map(move |&outward| Mutation::AddNode {
                    attach_to: a,
                    outward,
                })
            })
            .collect()
    }

    /// Every edge mutation: unordered unconnected pairs, or absent arcs when directed.
    pub fn edge_mutations(&self) -> Vec<Mutation> {
        let n = self.num_nodes;
        if self.directed {
            (0..n)
                .cartesian_product(0..n)
                .filter(|&(i, j)| i != j && !self.has_edge(i, j))
                .map(|(from, to)| Mutation::AddEdge { from, to })
                .collect()
        } else {
            (0..n)
                .tuple_combinations()
                .filter(|&(i, j)| !self.adjacent(i, j))
                .map(|(from, to)| Mutation::AddEdge { from, to })
                .collect()
        }
    }

    pub fn to_json(&self) -> TemplateJson {
        TemplateJson {
            name: self.name.clone(),
            directed: self.directed,
            num_nodes: self.num_nodes,
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }

    pub fn from_json(json: &TemplateJson, cap: usize) -> Result<Self, TemplateError> {
        let edges: Vec<_> = json.edges.iter().map(|e| (e[0], e[1])).collect();
        let mut t = Self::with_cap(json.num_nodes, &edges, json.directed, cap)?;
        t.name.clone_from(&json.name);
        Ok(t)
    }
}

impl fmt::Display for AnchoredTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = if self.directed { "->" } else { "-" };
        if let Some(name) = &self.name {
            write!(f, "{name} ")?;
        }
        write!(f, "[n={}:", self.num_nodes)?;
        for (i, j) in &self.edges {
            write!(f, " {i}{arrow}{j}")?;
        }
        write!(f, "]")
    }
}

/// A single structural change turning a parent template into a child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mutation {
    /// Append node `n` joined to `attach_to`; `outward` orients the arc
    /// `attach_to -> n` in directed templates.
    AddNode { attach_to: usize, outward: bool },
    /// Join two existing nodes (arc `from -> to` when directed).
    AddEdge { from: usize, to: usize },
}

/// Anchor-aware canonical encoding; equal iff an anchor-fixing isomorphism exists.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalForm(pub Vec<u8>);

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:x}")?;
        }
        Ok(())
    }
}

/// Parses one template object, or an array of them.
pub fn parse_templates(text: &str, cap: usize) -> Result<Vec<AnchoredTemplate>, TemplateError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| TemplateError::Json(e.to_string()))?;
    let items: Vec<TemplateJson> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|t| vec![t])
    }
    .map_err(|e| TemplateError::Json(e.to_string()))?;
    items.iter().map(|t| AnchoredTemplate::from_json(t, cap)).collect()
}

pub fn parse_template(text: &str) -> Result<AnchoredTemplate, TemplateError> {
    let json: TemplateJson =
        serde_json::from_str(text).map_err(|e| TemplateError::Json(e.to_string()))?;
    AnchoredTemplate::from_json(&json, DEFAULT_SIZE_CAP)
}

pub fn templates_to_json(templates: &[AnchoredTemplate]) -> String {
    let items: Vec<_> = templates.iter().map(AnchoredTemplate::to_json).collect();
    serde_json::to_string_pretty(&items).expect("serializable")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Citation,
    Social,
    Ecommerce,
}

impl FromStr for Domain {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "citation" => Ok(Self::Citation),
            "social" => Ok(Self::Social),
            "ecommerce" | "e-commerce" | "amazon" => Ok(Self::Ecommerce),
            _ => Err(TemplateError::UnknownDomain(s.to_owned())),
        }
    }
}

/// The hand-designed templates S1..S11.
pub mod catalogue {
    use super::AnchoredTemplate;

    fn build(name: &str, n: usize, edges: &[(usize, usize)], directed: bool) -> AnchoredTemplate {
        AnchoredTemplate::new(n, edges, directed)
            .expect("catalogue templates are valid")
            .named(name)
    }

    /// Edge.
    pub fn s1() -> AnchoredTemplate {
        build("S1", 2, &[(0, 1)], false)
    }
    /// 3-path anchored at an end.
    pub fn s2() -> AnchoredTemplate {
        build("S2", 3, &[(0, 1), (1, 2)], false)
    }
    /// Triangle.
    pub fn s3() -> AnchoredTemplate {
        build("S3", 3, &[(0, 1), (0, 2), (1, 2)], false)
    }
    /// 4-path anchored at an end.
    pub fn s4() -> AnchoredTemplate {
        build("S4", 4, &[(0, 1), (1, 2), (2, 3)], false)
    }
    /// 4-clique.
    pub fn s5() -> AnchoredTemplate {
        build(
            "S5",
            4,
            &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
            false,
        )
    }
    /// Tailed triangle: a triangle on the anchor plus one extra anchor neighbor.
    pub fn s6() -> AnchoredTemplate {
        build("S6", 4, &[(0, 1), (0, 2), (1, 2), (0, 3)], false)
    }
    /// To: a neighbor pointing at the ego.
    pub fn s7() -> AnchoredTemplate {
        build("S7", 2, &[(1, 0)], true)
    }
    /// From: the ego pointing at a neighbor.
    pub fn s8() -> AnchoredTemplate {
        build("S8", 2, &[(0, 1)], true)
    }
    /// Bi-direct.
    pub fn s9() -> AnchoredTemplate {
        build("S9", 2, &[(0, 1), (1, 0)], true)
    }
    /// From-to: one in-neighbor and one out-neighbor.
    pub fn s10() -> AnchoredTemplate {
        build("S10", 3, &[(1, 0), (0, 2)], true)
    }
    /// Directed triangle with both arcs into the ego and a mutual arc between
    /// the two others; its ego-automorphisms swap nodes 1 and 2.
    pub fn s11() -> AnchoredTemplate {
        build("S11", 3, &[(1, 0), (2, 0), (1, 2), (2, 1)], true)
    }
    /// Cyclic directed triangle `0 -> 1 -> 2 -> 0`; every node is its own orbit.
    pub fn s11_cyclic() -> AnchoredTemplate {
        build("S11-cyclic", 3, &[(0, 1), (1, 2), (2, 0)], true)
    }

    pub fn all() -> Vec<AnchoredTemplate> {
        vec![s1(), s2(), s3(), s4(), s5(), s6(), s7(), s8(), s9(), s10(), s11()]
    }

    pub fn by_name(name: &str) -> Option<AnchoredTemplate> {
        let all = all().into_iter().chain([s11_cyclic()]);
        all.into_iter()
            .find(|t| t.name().is_some_and(|n| n.eq_ignore_ascii_case(name)))
    }

    pub fn for_domain(domain: super::Domain) -> Vec<AnchoredTemplate> {
        use super::Domain::*;
        match domain {
            Citation => vec![s1(), s2(), s3(), s4(), s6()],
            Social => vec![s1(), s2(), s3(), s5(), s6()],
            Ecommerce => vec![s7(), s8(), s9(), s10(), s11()],
        }
    }
}
