//! Small seeded graphs and labeled toy datasets.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{FeatureMatrix, Graph, LabelVector, NodeId};

/// A graph with node features and labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: LabelVector,
}

pub fn cycle(n: usize) -> Graph {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::new(n, &edges, false)
}

pub fn path(n: usize) -> Graph {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::new(n, &edges, false)
}

pub fn complete(n: usize) -> Graph {
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j));
        }
    }
    Graph::new(n, &edges, false)
}

/// Node 0 joined to `leaves` leaves.
pub fn star(leaves: usize) -> Graph {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    Graph::new(leaves + 1, &edges, false)
}

/// Erdős–Rényi graph. Directed graphs draw each ordered pair independently.
pub fn gnp(n: usize, p: f64, directed: bool, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        let start = if directed { 0 } else { i + 1 };
        for j in start..n {
            if i != j && rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, &edges, directed)
}

/// Relabels nodes by a seeded permutation, carrying labels and features along.
fn shuffled(n: usize, edges: &[(NodeId, NodeId)], labels: &[usize], features: Array2<f64>, seed: u64) -> Dataset {
    // A separate stream keeps this permutation independent of a split drawn
    // from the same seed.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let edges: Vec<_> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
    let mut new_labels = vec![0; n];
    let mut new_features = Array2::zeros(features.raw_dim());
    for old in 0..n {
        new_labels[perm[old]] = labels[old];
        new_features.row_mut(perm[old]).assign(&features.row(old));
    }
    Dataset {
        graph: Graph::new(n, &edges, false),
        features: FeatureMatrix::new(new_features).expect("finite features"),
        labels: LabelVector::new(new_labels),
    }
}

/// `stars_per_class` stars per class, each a center with `leaves` leaves.
/// Every node of a class-`c` star carries the one-hot feature `e_c`.
pub fn two_star(stars_per_class: usize, leaves: usize, seed: u64) -> Dataset {
    let size = leaves + 1;
    let n = 2 * stars_per_class * size;
    let mut edges = Vec::new();
    let mut labels = Vec::with_capacity(n);
    let mut features = Array2::zeros((n, 2));
    for star in 0..2 * stars_per_class {
        let center = star * size;
        let class = star % 2;
        for leaf in 1..size {
            edges.push((center, center + leaf));
        }
        for v in center..center + size {
            labels.push(class);
            features[[v, class]] = 1.0;
        }
    }
    shuffled(n, &edges, &labels, features, seed)
}

/// Disjoint triangles (label 1) and hexagons (label 0) with all-ones
/// features. Every node has degree 2, so sum aggregation cannot tell the
/// classes apart; only a triangle-bearing template can.
pub fn cycle_vs_triangle(triangles: usize, hexagons: usize, seed: u64) -> Dataset {
    let n = 3 * triangles + 6 * hexagons;
    let mut edges = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut offset = 0;
    for (count, len, label) in [(triangles, 3, 1), (hexagons, 6, 0)] {
        for _ in 0..count {
            for i in 0..len {
                edges.push((offset + i, offset + (i + 1) % len));
                labels.push(label);
            }
            offset += len;
        }
    }
    shuffled(n, &edges, &labels, Array2::ones((n, 1)), seed)
}

/// The planted-triangle search task: 20 triangles and 10 hexagons, balanced classes.
pub fn planted_triangles(seed: u64) -> Dataset {
    cycle_vs_triangle(20, 10, seed)
}
