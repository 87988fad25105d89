use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("graph has no nodes")]
    Empty,
    #[error("node {node} out of range for a graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("feature file has {found} rows, graph has {expected} nodes")]
    RowCount { expected: usize, found: usize },
    #[error("non-finite feature value in row {row}")]
    NonFiniteFeature { row: usize },
    #[error("label {label} is not below num_classes = {num_classes}")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("label file references unknown node id {id}")]
    UnknownNode { id: i64 },
    #[error("node {node} has no label")]
    MissingLabel { node: usize },
    #[error("cannot split {n} nodes; need at least 5")]
    SplitTooSmall { n: usize },
}

impl GraphError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template json: {0}")]
    Json(String),
    #[error("template needs at least 2 nodes, got {0}")]
    TooSmall(usize),
    #[error("template has {num_nodes} nodes, over the cap of {cap}")]
    OverCap { num_nodes: usize, cap: usize },
    #[error("edge ({0}, {1}) references a node outside the template")]
    NodeOutOfRange(usize, usize),
    #[error("self-loop on template node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("template skeleton is disconnected")]
    Disconnected,
    #[error("unknown template domain {0:?} (expected citation, social or ecommerce)")]
    UnknownDomain(String),
    #[error("invalid mutation: {0}")]
    InvalidMutation(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchError {
    #[error("ego {ego} out of range for a graph with {num_nodes} nodes")]
    EgoOutOfRange { ego: usize, num_nodes: usize },
    #[error("undirected template on a directed graph; symmetrize the graph to ignore direction")]
    DirectionMismatch,
    #[error("child template is not the parent plus the stated mutation: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Match(#[from] MatchError),
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    Config(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
