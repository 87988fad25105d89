//! A 6-cycle and two disjoint triangles with identical features: every node
//! has two neighbors, so sum-aggregation message passing maps all twelve nodes
//! to one embedding at any depth, while a triangle template tells the two
//! graphs apart.

use ndarray::Array2;
use serde::Serialize;

use crate::error::ModelError;
use crate::graph::Graph;
use crate::matcher::{build_index, MatchOptions};
use crate::model::mpnn::mpnn_forward;
use crate::model::{GrapeModel, Mode, ModelConfig};
use crate::synthetic::cycle;
use crate::templates::catalogue;

/// Node of the cycle compared against a triangle node.
pub const CYCLE_NODE: usize = 0;
/// First triangle node in [`limitation_graph`].
pub const TRIANGLE_NODE: usize = 6;

/// Nodes `0..6` form the cycle, `6..9` and `9..12` the triangles.
pub fn limitation_graph() -> Graph {
    let triangles = Graph::new(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], false);
    cycle(6).disjoint_union(&triangles)
}

#[derive(Debug, Clone, Serialize)]
pub struct DepthResult {
    pub layers: usize,
    /// Largest distance between any two node embeddings over all layers.
    pub mpnn_max_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitationReport {
    pub mpnn: Vec<DepthResult>,
    pub mpnn_passed: bool,
    /// Distance between a triangle node and a cycle node, one per seed.
    pub grape_distances: Vec<f64>,
    pub grape_seeds: Vec<u64>,
    pub grape_separated: usize,
    pub grape_passed: bool,
    pub threshold: f64,
    pub triangle_matches_in_cycle: usize,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct LimitationConfig {
    /// Message-passing depths `1..=max_layers` are checked.
    pub max_layers: usize,
    /// Depth of the triangle-aware network.
    pub grape_layers: usize,
    pub hidden: usize,
    pub seeds: usize,
    pub base_seed: u64,
    pub threshold: f64,
}

impl Default for LimitationConfig {
    fn default() -> Self {
        Self {
            max_layers: 5,
            grape_layers: 2,
            hidden: 16,
            seeds: 20,
            base_seed: 0,
            threshold: 1e-6,
        }
    }
}

fn distance(h: &Array2<f64>, a: usize, b: usize) -> f64 {
    h.row(a)
        .iter()
        .zip(h.row(b))
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn max_pairwise(h: &Array2<f64>) -> f64 {
    let n = h.nrows();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            worst = worst.max(distance(h, a, b));
        }
    }
    worst
}

pub fn run_limitation_demo(config: &LimitationConfig) -> Result<LimitationReport, ModelError> {
    let g = limitation_graph();
    let x = Array2::ones((g.num_nodes(), 1));

    let mut mpnn = Vec::new();
    for layers in 1..=config.max_layers {
        let embeddings = mpnn_forward(&g, &x, layers, config.hidden, config.base_seed + layers as u64)?;
        let worst = embeddings.iter().map(max_pairwise).fold(0.0, f64::max);
        mpnn.push(DepthResult {
            layers,
            mpnn_max_distance: worst,
        });
    }
    let mpnn_passed = mpnn.iter().all(|d| d.mpnn_max_distance == 0.0);

    let index = build_index(&g, &catalogue::s3(), &MatchOptions::unlimited())?;
    let triangle_matches_in_cycle = (0..6).map(|v| index.matches(v).len()).sum();
    let mut grape_distances = Vec::with_capacity(config.seeds);
    let mut grape_seeds = Vec::with_capacity(config.seeds);
    for i in 0..config.seeds {
        let seed = config.base_seed + i as u64;
        let model_config = ModelConfig {
            layers: config.grape_layers,
            hidden: config.hidden,
            seed,
            ..ModelConfig::default()
        };
        let model = GrapeModel::new(model_config, std::slice::from_ref(&index), 1, 2)?;
        let trace = model.forward(std::slice::from_ref(&index), &x, Mode::Eval)?;
        grape_distances.push(distance(trace.embeddings(), TRIANGLE_NODE, CYCLE_NODE));
        grape_seeds.push(seed);
    }
    let grape_separated = grape_distances.iter().filter(|&&d| d > config.threshold).count();
    let grape_passed = grape_separated == config.seeds;
    Ok(LimitationReport {
        mpnn,
        mpnn_passed,
        grape_distances,
        grape_seeds,
        grape_separated,
        grape_passed,
        threshold: config.threshold,
        triangle_matches_in_cycle,
        passed: mpnn_passed && grape_passed,
    })
}
