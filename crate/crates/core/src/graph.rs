//! Graph storage, node features, labels and train/validation/test splits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;

pub type NodeId = usize;

/// Compressed adjacency: `targets[offsets[v]..offsets[v + 1]]` are the sorted neighbors of `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl Csr {
    fn build(num_nodes: usize, pairs: impl Iterator<Item = (NodeId, NodeId)>) -> Self {
        let mut lists = vec![Vec::new(); num_nodes];
        for (u, v) in pairs {
            lists[u].push(v);
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for mut list in lists {
            list.sort_unstable();
            targets.extend(list);
            offsets.push(targets.len());
        }
        Self { offsets, targets }
    }

    #[inline]
    fn row(&self, v: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// Immutable simple graph. Undirected graphs store every edge once as `(min, max)`
/// and expose symmetric neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    directed: bool,
    edges: Vec<(NodeId, NodeId)>,
    out: Csr,
    inn: Option<Csr>,
}

/// What normalization dropped while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DropReport {
    pub duplicate_edges: usize,
    pub self_loops: usize,
}

impl DropReport {
    pub fn total(&self) -> usize {
        self.duplicate_edges + self.self_loops
    }
}

impl Graph {
    /// Builds a graph from raw edges, dropping self-loops and duplicates.
    pub fn from_edges(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        directed: bool,
    ) -> Result<(Self, DropReport), GraphError> {
        if num_nodes == 0 {
            return Err(GraphError::Empty);
        }
        let mut report = DropReport::default();
        let mut normalized = Vec::new();
        for (u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(GraphError::NodeOutOfRange {
                    node: u.max(v),
                    num_nodes,
                });
            }
            if u == v {
                report.self_loops += 1;
                continue;
            }
            normalized.push(if directed { (u, v) } else { (u.min(v), u.max(v)) });
        }
        normalized.sort_unstable();
        let before = normalized.len();
        normalized.dedup();
        report.duplicate_edges = before - normalized.len();
        Ok((Self::from_normalized(num_nodes, normalized, directed), report))
    }

    /// Convenience constructor for tests and generators; panics on invalid input.
    pub fn new(num_nodes: usize, edges: &[(NodeId, NodeId)], directed: bool) -> Self {
        Self::from_edges(num_nodes, edges.iter().copied(), directed)
            .expect("valid edge list")
            .0
    }

    fn from_normalized(num_nodes: usize, edges: Vec<(NodeId, NodeId)>, directed: bool) -> Self {
        let (out, inn) = if directed {
            let out = Csr::build(num_nodes, edges.iter().copied());
            let inn = Csr::build(num_nodes, edges.iter().map(|&(u, v)| (v, u)));
            (out, Some(inn))
        } else {
            let sym = edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)]);
            (Csr::build(num_nodes, sym), None)
        };
        Self {
            num_nodes,
            directed,
            edges,
            out,
            inn,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Normalized edges in ascending order.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Out-neighbors (all neighbors when undirected), sorted ascending.
    #[inline]
    pub fn out_neighbors(&self, v: NodeId) -> &[NodeId] {
        self.out.row(v)
    }

    /// In-neighbors (all neighbors when undirected), sorted ascending.
    #[inline]
    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        match &self.inn {
            Some(inn) => inn.row(v),
            None => self.out.row(v),
        }
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        self.out_neighbors(v)
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.out_neighbors(v).len()
    }

    /// `true` if the arc `u -> v` exists (either direction when undirected).
    #[inline]
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.out.row(u).binary_search(&v).is_ok()
    }

    /// Undirected view of a directed graph; identity for undirected graphs.
    pub fn symmetrized(&self) -> Graph {
        if !self.directed {
            return self.clone();
        }
        Graph::from_edges(self.num_nodes, self.edges.iter().copied(), false)
            .expect("edges already validated")
            .0
    }

    /// Disjoint union; node ids of `other` are shifted by `self.num_nodes()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        assert_eq!(self.directed, other.directed, "union of mixed directedness");
        let shift = self.num_nodes;
        let edges = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(u, v)| (u + shift, v + shift)));
        Graph::from_edges(self.num_nodes + other.num_nodes, edges, self.directed)
            .expect("valid union")
            .0
    }

    /// Serializes to the whitespace-separated edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# nodes={} edges={} directed={}",
            self.num_nodes,
            self.edges.len(),
            self.directed
        );
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// A graph read from an edge list together with the original node ids.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// `original_ids[dense] = id as written in the input file`.
    pub original_ids: Vec<i64>,
    pub dropped: DropReport,
}

impl LoadedGraph {
    /// `true` when the input ids were not already `0..n`.
    pub fn was_remapped(&self) -> bool {
        self.original_ids
            .iter()
            .enumerate()
            .any(|(i, &id)| id != i as i64)
    }

    /// Dense id for an id as it appeared in the input.
    pub fn dense_id(&self, original: i64) -> Option<NodeId> {
        self.original_ids.binary_search(&original).ok()
    }

    /// Sidecar CSV `dense_id,original_id`.
    pub fn id_map_csv(&self) -> String {
        let mut out = String::new();
        for (dense, original) in self.original_ids.iter().enumerate() {
            let _ = writeln!(out, "{dense},{original}");
        }
        out
    }
}

/// Parses edge-list text: one `src dst` pair per line, `#` comments ignored.
///
/// Ids are remapped densely in ascending order of their original value, so
/// contiguous `0..n` inputs keep their ids.
pub fn parse_edge_list(text: &str, directed: bool) -> Result<LoadedGraph, GraphError> {
    let mut raw = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut next = || -> Result<i64, GraphError> {
            tokens
                .next()
                .and_then(|t| t.parse::<i64>().ok())
                .ok_or_else(|| GraphError::Parse {
                    line: lineno + 1,
                    message: format!("expected two integer node ids, got {line:?}"),
                })
        };
        let (u, v) = (next()?, next()?);
        if tokens.next().is_some() {
            return Err(GraphError::Parse {
                line: lineno + 1,
                message: format!("expected two integer node ids, got {line:?}"),
            });
        }
        raw.push((u, v));
    }
    if raw.is_empty() {
        return Err(GraphError::Empty);
    }
    let mut ids: Vec<i64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    let lookup: BTreeMap<i64, NodeId> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let edges = raw.iter().map(|(u, v)| (lookup[u], lookup[v]));
    let (graph, dropped) = Graph::from_edges(ids.len(), edges, directed)?;
    if dropped.total() > 0 {
        log::warn!(
            "edge list: dropped {} duplicate edges and {} self-loops",
            dropped.duplicate_edges,
            dropped.self_loops
        );
    }
    Ok(LoadedGraph {
        graph,
        original_ids: ids,
        dropped,
    })
}

pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<LoadedGraph, GraphError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GraphError::io(path, e))?;
    parse_edge_list(&text, directed)
}

/// Dense node-feature table, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self, GraphError> {
        if let Some(bad) = values.iter().position(|x| !x.is_finite()) {
            return Err(GraphError::NonFiniteFeature {
                row: bad / values.ncols().max(1),
            });
        }
        Ok(Self { values })
    }

    /// All-ones features of width 1.
    pub fn ones(num_nodes: usize) -> Self {
        Self {
            values: Array2::ones((num_nodes, 1)),
        }
    }

    /// Seeded uniform features in `[0, 1)`.
    pub fn random(num_nodes: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            values: Array2::from_shape_simple_fn((num_nodes, dim), || rng.random::<f64>()),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Scales each nonzero row to unit L1 norm.
    pub fn row_normalized(mut self) -> Self {
        for mut row in self.values.rows_mut() {
            let s: f64 = row.iter().map(|x| x.abs()).sum();
            if s > 0.0 {
                row.mapv_inplace(|x| x / s);
            }
        }
        self
    }
}

/// Parses headerless CSV features with exactly `num_nodes` rows.
pub fn parse_features(text: &str, num_nodes: usize) -> Result<FeatureMatrix, GraphError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| GraphError::Parse {
                    line: lineno + 1,
                    message: format!("non-numeric feature cell {:?}", cell.trim()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.len() != num_nodes {
        return Err(GraphError::RowCount {
            expected: num_nodes,
            found: rows.len(),
        });
    }
    let dim = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    FeatureMatrix::new(Array2::from_shape_vec((num_nodes, dim), flat).expect("rectangular"))
}

pub fn load_features(path: impl AsRef<Path>, num_nodes: usize) -> Result<FeatureMatrix, GraphError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GraphError::io(path, e))?;
    parse_features(&text, num_nodes)
}

/// Per-node class indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Self {
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        Self {
            labels,
            num_classes,
        }
    }

    pub fn with_num_classes(labels: Vec<usize>, num_classes: usize) -> Result<Self, GraphError> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(GraphError::LabelOutOfRange {
                label: bad,
                num_classes,
            });
        }
        Ok(Self {
            labels,
            num_classes,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, v: NodeId) -> usize {
        self.labels[v]
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Parses a `node_id,label` CSV. `dense_id` maps file ids to graph ids; every node needs a label.
pub fn parse_labels(
    text: &str,
    num_nodes: usize,
    dense_id: impl Fn(i64) -> Option<NodeId>,
) -> Result<LabelVector, GraphError> {
    let mut labels = vec![None; num_nodes];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = || GraphError::Parse {
            line: lineno + 1,
            message: format!("expected `node_id,label`, got {line:?}"),
        };
        let (id, label) = line.split_once(',').ok_or_else(parse_err)?;
        let id: i64 = id.trim().parse().map_err(|_| parse_err())?;
        let label: usize = label.trim().parse().map_err(|_| parse_err())?;
        let node = dense_id(id).ok_or(GraphError::UnknownNode { id })?;
        labels[node] = Some(label);
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(v, l)| l.ok_or(GraphError::MissingLabel { node: v }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LabelVector::new(labels))
}

pub fn load_labels(
    path: impl AsRef<Path>,
    num_nodes: usize,
    dense_id: impl Fn(i64) -> Option<NodeId>,
) -> Result<LabelVector, GraphError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GraphError::io(path, e))?;
    parse_labels(&text, num_nodes, dense_id)
}

/// Disjoint train / validation / test node sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub train: Vec<NodeId>,
    pub val: Vec<NodeId>,
    pub test: Vec<NodeId>,
}

/// Seeded 60/20/20 split of `0..n`. Each set is stored sorted.
pub fn make_split(n: usize, seed: u64) -> Result<Split, GraphError> {
    if n < 5 {
        return Err(GraphError::SplitTooSmall { n });
    }
    let mut perm: Vec<NodeId> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n as f64 * 0.6).round() as usize;
    let n_val = (n as f64 * 0.2).round() as usize;
    let mut train = perm[..n_train].to_vec();
    let mut val = perm[n_train..n_train + n_val].to_vec();
    let mut test = perm[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        seed,
        train,
        val,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_from_text() {
        let g = parse_edge_list("0 1\n1 2", false).unwrap().graph;
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn duplicates_and_self_loops_dropped() {
        let loaded = parse_edge_list("0 1\n0 1\n1 1", false).unwrap();
        assert_eq!(loaded.graph.num_nodes(), 2);
        assert_eq!(loaded.graph.num_edges(), 1);
        assert_eq!(loaded.dropped.total(), 2);
        assert_eq!(loaded.dropped.self_loops, 1);
    }

    #[test]
    fn four_clique_degrees() {
        let text = "0 1\n0 2\n0 3\n1 2\n1 3\n2 3";
        let g = parse_edge_list(text, false).unwrap().graph;
        assert!((0..4).all(|v| g.degree(v) == 3));
    }

    #[test]
    fn undirected_reverse_duplicates_collapse() {
        let loaded = parse_edge_list("0 1\n1 0", false).unwrap();
        assert_eq!(loaded.graph.num_edges(), 1);
        assert_eq!(loaded.dropped.duplicate_edges, 1);
        let directed = parse_edge_list("0 1\n1 0", true).unwrap();
        assert_eq!(directed.graph.num_edges(), 2);
    }

    #[test]
    fn comments_and_sparse_ids() {
        let loaded = parse_edge_list("# header\n10 30\n30 7\n", false).unwrap();
        assert_eq!(loaded.original_ids, vec![7, 10, 30]);
        assert!(loaded.was_remapped());
        assert_eq!(loaded.dense_id(30), Some(2));
        assert_eq!(loaded.graph.neighbors(2), &[0, 1]);
        assert_eq!(loaded.id_map_csv(), "0,7\n1,10\n2,30\n");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse_edge_list("0 1\n# c\n1 x\n", false) {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_edge_list("0 1 2\n", false),
            Err(GraphError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_edge_list_is_error() {
        assert!(matches!(parse_edge_list("# nothing\n", false), Err(GraphError::Empty)));
    }

    #[test]
    fn directed_in_out_lists() {
        let g = Graph::new(3, &[(0, 1), (2, 1), (1, 0)], true);
        assert_eq!(g.out_neighbors(1), &[0]);
        assert_eq!(g.in_neighbors(1), &[0, 2]);
        assert!(g.has_edge(2, 1));
        assert!(!g.has_edge(1, 2));
        let s = g.symmetrized();
        assert!(!s.is_directed());
        assert_eq!(s.num_edges(), 2);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::new(5, &[(3, 1), (0, 4), (2, 1), (1, 0)], false);
        let back = parse_edge_list(&g.to_edge_list(), false).unwrap().graph;
        assert_eq!(g, back);
    }

    #[test]
    fn features_csv() {
        let f = parse_features("1,0\n0,1\n1,1", 3).unwrap();
        assert_eq!(f.dim(), 2);
        assert!(matches!(
            parse_features("1,0\n0,1", 3),
            Err(GraphError::RowCount { expected: 3, found: 2 })
        ));
        assert!(matches!(parse_features("1,a\n", 1), Err(GraphError::Parse { line: 1, .. })));
        assert!(matches!(parse_features("1,0\n1\n", 2), Err(GraphError::Parse { line: 2, .. })));
    }

    #[test]
    fn dummy_and_random_features() {
        let ones = FeatureMatrix::ones(5);
        assert_eq!(ones.values().dim(), (5, 1));
        assert!(ones.values().iter().all(|&x| x == 1.0));
        let a = FeatureMatrix::random(5, 4, 7);
        let b = FeatureMatrix::random(5, 4, 7);
        assert_eq!(a, b);
        assert_eq!(a.values().dim(), (5, 4));
        assert_ne!(a, FeatureMatrix::random(5, 4, 8));
    }

    #[test]
    fn row_normalization() {
        let f = parse_features("1,3\n0,0", 2).unwrap().row_normalized();
        assert_eq!(f.values().row(0).to_vec(), vec![0.25, 0.75]);
        assert_eq!(f.values().row(1).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn labels_csv() {
        let l = parse_labels("0,1\n1,0\n2,2\n", 3, |id| Some(id as usize)).unwrap();
        assert_eq!(l.num_classes(), 3);
        assert!(matches!(
            parse_labels("0,1\n", 2, |id| Some(id as usize)),
            Err(GraphError::MissingLabel { node: 1 })
        ));
        assert!(LabelVector::with_num_classes(vec![0, 3], 2).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let s = make_split(10, 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));
        assert_eq!(s, make_split(10, 1).unwrap());
        let other = make_split(10, 2).unwrap();
        let mut all: Vec<_> = other.train.iter().chain(&other.val).chain(&other.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(make_split(4, 0).is_err());
    }

    #[test]
    fn split_json_shape() {
        let s = make_split(5, 3).unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        for key in ["seed", "train", "val", "test"] {
            assert!(v.get(key).is_some());
        }
    }
}
