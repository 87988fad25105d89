//! Sum-aggregation message passing, `h^k(v) = MLP(h^{k-1}(v) + Σ_{u ∈ N(v)} h^{k-1}(u))`.
//!
//! Realized as the AE-aware network with the single edge template, both orbit
//! weights frozen at 1 and plain-sum fusion: the edge template's orbit sets
//! are exactly `{v}` and `N(v)`.

use ndarray::Array2;

use super::{train, Fusion, GrapeModel, Mode, ModelConfig, TrainReport};
use crate::error::ModelError;
use crate::graph::{Graph, LabelVector, Split};
use crate::matcher::{build_index, EgoAeIndex, MatchOptions};
use crate::templates::catalogue;

pub struct MpnnBaseline {
    pub model: GrapeModel,
    index: EgoAeIndex,
}

impl MpnnBaseline {
    pub fn new(
        g: &Graph,
        feature_dim: usize,
        num_classes: usize,
        config: ModelConfig,
    ) -> Result<Self, ModelError> {
        let config = ModelConfig {
            fusion: Fusion::Sum,
            learn_orbit_weights: false,
            ..config
        };
        let index = build_index(&g.symmetrized(), &catalogue::s1(), &MatchOptions::unlimited())?;
        let model = GrapeModel::new(config, std::slice::from_ref(&index), feature_dim, num_classes)?;
        Ok(Self { model, index })
    }

    /// Embeddings after each layer, in evaluation mode.
    pub fn layer_embeddings(&self, x: &Array2<f64>) -> Result<Vec<Array2<f64>>, ModelError> {
        let trace = self
            .model
            .forward(std::slice::from_ref(&self.index), x, Mode::Eval)?;
        Ok(trace.layers.into_iter().map(|l| l.fused).collect())
    }

    pub fn train(
        &mut self,
        x: &Array2<f64>,
        labels: &LabelVector,
        split: &Split,
    ) -> Result<TrainReport, ModelError> {
        train(&mut self.model, std::slice::from_ref(&self.index), x, labels, split)
    }
}

/// Embeddings of a randomly initialized baseline after each of `layers` layers.
pub fn mpnn_forward(
    g: &Graph,
    x: &Array2<f64>,
    layers: usize,
    hidden: usize,
    seed: u64,
) -> Result<Vec<Array2<f64>>, ModelError> {
    let config = ModelConfig {
        layers,
        hidden,
        seed,
        ..ModelConfig::default()
    };
    MpnnBaseline::new(g, x.ncols(), 2, config)?.layer_embeddings(x)
}
