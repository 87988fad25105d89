//! The AE-aware graph network.
//!
//! Each layer runs one aggregator per template: orbit sums of the previous
//! embeddings are mixed by learnable orbit weights `beta` and passed through a
//! per-template MLP. The per-template tables are then fused with
//! squeeze-and-excitation weights `alpha`. A two-layer MLP head produces logits.
//! Gradients are computed by a hand-written reverse pass over this fixed graph.

mod params;
mod train;
pub mod mpnn;

use std::borrow::Borrow;

use ndarray::{Array1, Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::graph::{LabelVector, NodeId};
use crate::matcher::EgoAeIndex;
use crate::templates::CanonicalForm;

pub use params::{Dense, LayerParams, Params, TensorKind, TwoLayer};
pub use train::{train, Adam, EarlyStopper, EpochLog, TrainReport};

/// What each template channel consumes at layer `k > 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelInput {
    /// The fused embedding of the previous layer.
    #[default]
    Fused,
    /// The channel's own embedding from the previous layer.
    PerChannel,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fusion {
    /// Squeeze-and-excitation weights.
    #[default]
    SqueezeExcite,
    /// Plain sum of channels (`alpha = 1`); used by the message-passing baseline.
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    /// Coefficient `λ` of the penalty `λ/2 · Σ w²` over weight matrices.
    pub l2: f64,
    pub lr: f64,
    pub lr_decay: f64,
    pub lr_decay_every: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub channel_input: ChannelInput,
    pub fusion: Fusion,
    pub learn_orbit_weights: bool,
    /// Standard deviation of the noise added to the identity SE matrices at init.
    pub se_init_noise: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden: 32,
            dropout: 0.5,
            l2: 5e-5,
            lr: 0.01,
            lr_decay: 0.5,
            lr_decay_every: 100,
            max_epochs: 500,
            patience: 50,
            seed: 0,
            channel_input: ChannelInput::Fused,
            fusion: Fusion::SqueezeExcite,
            learn_orbit_weights: true,
            se_init_noise: 0.01,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: &str| Err(ModelError::Config(m.to_owned()));
        if self.layers < 1 {
            return err("layers must be at least 1");
        }
        if self.hidden < 1 {
            return err("hidden size must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return err("dropout must be in [0, 1)");
        }
        let bad = |x: f64, min_exclusive: bool| x.is_nan() || x < 0.0 || (min_exclusive && x == 0.0);
        if bad(self.l2, false) || bad(self.lr, true) || bad(self.lr_decay, true) {
            return err("l2 must be nonnegative; lr and lr_decay positive");
        }
        if self.lr_decay_every == 0 || self.max_epochs == 0 || self.patience == 0 {
            return err("epoch counts must be positive");
        }
        Ok(())
    }

    /// The 16 combinations of embedding size, dropout, L2 and learning rate
    /// searched per dataset.
    pub fn grid(base: &ModelConfig) -> Vec<ModelConfig> {
        let mut out = Vec::new();
        for hidden in [16, 32] {
            for dropout in [0.3, 0.5] {
                for l2 in [3e-5, 5e-5] {
                    for lr in [0.01, 0.03] {
                        out.push(ModelConfig {
                            hidden,
                            dropout,
                            l2,
                            lr,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }

    /// Learning rate in effect at a 0-based epoch.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr * self.lr_decay.powi((epoch / self.lr_decay_every) as i32)
    }
}

/// Forward mode: dropout is only active in training.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

/// Intermediate values of one template channel at one layer.
#[derive(Debug, Clone)]
pub struct ChannelTrace {
    /// `Σ_j beta_j · Σ_{u ∈ A_j(v)} h[u]`
    pub aggregated: Array2<f64>,
    pub hidden_pre: Array2<f64>,
    pub hidden: Array2<f64>,
    pub out_pre: Array2<f64>,
    /// `h_l^k`
    pub embedding: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub channels: Vec<ChannelTrace>,
    pub gamma: Array1<f64>,
    pub se_hidden_pre: Array1<f64>,
    pub se_hidden: Array1<f64>,
    pub se_out_pre: Array1<f64>,
    pub alpha: Array1<f64>,
    /// `h^k` before dropout.
    pub fused: Array2<f64>,
    /// Inverted-dropout scale per entry (`0` or `1/(1-p)`); `None` in eval mode.
    pub dropout_scale: Option<Array2<f64>>,
    /// `h^k` after dropout: the input of the next layer.
    pub output: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub layers: Vec<LayerTrace>,
    pub head_pre: Array2<f64>,
    pub head_hidden: Array2<f64>,
    pub logits: Array2<f64>,
}

impl ForwardTrace {
    /// The final fused embeddings `h^{K}` (before dropout).
    pub fn embeddings(&self) -> &Array2<f64> {
        &self.layers.last().expect("at least one layer").fused
    }

    pub fn alphas(&self) -> Vec<Vec<f64>> {
        self.layers.iter().map(|l| l.alpha.to_vec()).collect()
    }

    pub fn predictions(&self) -> Vec<usize> {
        self.logits
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
                    .0
            })
            .collect()
    }

    pub fn accuracy(&self, labels: &LabelVector, nodes: &[NodeId]) -> f64 {
        if nodes.is_empty() {
            return 0.0;
        }
        let pred = self.predictions();
        let correct = nodes.iter().filter(|&&v| pred[v] == labels.get(v)).count();
        correct as f64 / nodes.len() as f64
    }
}

fn relu(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|x| x.max(0.0))
}

fn relu_backward(pre: &Array2<f64>, d: &mut Array2<f64>) {
    Zip::from(d).and(pre).for_each(|g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
}

fn relu1(a: &Array1<f64>) -> Array1<f64> {
    a.mapv(|x| x.max(0.0))
}

/// Orbit-weighted sums `Σ_j beta_j · Σ_{u ∈ A_j(v)} h[u]`, nodes visited in
/// ascending id order.
pub fn aggregate_sum(h_prev: &Array2<f64>, idx: &EgoAeIndex, beta: &Array1<f64>) -> Result<Array2<f64>, ModelError> {
    if h_prev.nrows() != idx.num_nodes() {
        return Err(ModelError::Shape(format!(
            "embedding table has {} rows, index covers {} nodes",
            h_prev.nrows(),
            idx.num_nodes()
        )));
    }
    if beta.len() != idx.num_orbits() {
        return Err(ModelError::Shape(format!(
            "{} orbit weights for a template with {} orbits",
            beta.len(),
            idx.num_orbits()
        )));
    }
    let mut z = Array2::zeros(h_prev.raw_dim());
    for (v, mut row) in z.rows_mut().into_iter().enumerate() {
        for (j, set) in idx.ae_sets(v).iter().enumerate() {
            let b = beta[j];
            for &u in set {
                row.scaled_add(b, &h_prev.row(u));
            }
        }
    }
    Ok(z)
}

/// AE-aware aggregation: `MLP(Σ_j beta_j · Σ_{u ∈ A_j(v)} h[u])` with a ReLU
/// on the MLP output.
pub fn aggregate_ae(
    h_prev: &Array2<f64>,
    idx: &EgoAeIndex,
    beta: &Array1<f64>,
    mlp: &TwoLayer,
) -> Result<Array2<f64>, ModelError> {
    let z = aggregate_sum(h_prev, idx, beta)?;
    if z.ncols() != mlp.hidden.inputs() {
        return Err(ModelError::Shape(format!(
            "MLP expects {} inputs, embeddings have {}",
            mlp.hidden.inputs(),
            z.ncols()
        )));
    }
    Ok(relu(&mlp.out.forward(&relu(&mlp.hidden.forward(&z)))))
}

/// Global average pooling per channel.
fn pool(channels: &[&Array2<f64>]) -> Array1<f64> {
    channels
        .iter()
        .map(|h| h.mean().unwrap_or(0.0))
        .collect()
}

/// Squeeze-and-excitation weights `relu(W2 · relu(W1 · gamma))`, where
/// `gamma[l]` is the mean of channel `l` over nodes and coordinates.
pub fn se_weights(channels: &[&Array2<f64>], w1: &Array2<f64>, w2: &Array2<f64>) -> Array1<f64> {
    let gamma = pool(channels);
    relu1(&w2.dot(&relu1(&w1.dot(&gamma))))
}

/// `Σ_l alpha[l] · h_l`.
pub fn fuse(channels: &[&Array2<f64>], alpha: &Array1<f64>) -> Result<Array2<f64>, ModelError> {
    if channels.len() != alpha.len() || channels.is_empty() {
        return Err(ModelError::Shape(format!(
            "{} channels, {} fusion weights",
            channels.len(),
            alpha.len()
        )));
    }
    let shape = channels[0].raw_dim();
    let mut out = Array2::zeros(shape);
    for (h, &a) in channels.iter().zip(alpha) {
        if h.raw_dim() != shape {
            return Err(ModelError::Shape("channel tables differ in shape".into()));
        }
        out.scaled_add(a, *h);
    }
    Ok(out)
}

/// Parameters, shapes and optimizer state of one network instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrapeModel {
    pub config: ModelConfig,
    pub params: Params,
    pub feature_dim: usize,
    pub num_classes: usize,
    pub orbit_counts: Vec<usize>,
    /// Canonical forms of the templates the channels were built for.
    pub templates: Vec<CanonicalForm>,
    #[serde(skip)]
    pub optimizer: Option<Adam>,
}

impl GrapeModel {
    pub fn new<I: Borrow<EgoAeIndex>>(
        config: ModelConfig,
        indices: &[I],
        feature_dim: usize,
        num_classes: usize,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        if indices.is_empty() {
            return Err(ModelError::Config("at least one template is required".into()));
        }
        let orbit_counts: Vec<usize> = indices.iter().map(|i| i.borrow().num_orbits()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = Params::init(
            feature_dim,
            config.hidden,
            num_classes.max(1),
            &orbit_counts,
            config.layers,
            config.se_init_noise,
            &mut rng,
        );
        if !config.learn_orbit_weights {
            for layer in &mut params.layers {
                for b in &mut layer.beta {
                    b.fill(1.0);
                }
            }
        }
        Ok(Self {
            templates: indices.iter().map(|i| i.borrow().template().canonical_form()).collect(),
            config,
            params,
            feature_dim,
            num_classes,
            orbit_counts,
            optimizer: None,
        })
    }

    pub fn num_templates(&self) -> usize {
        self.orbit_counts.len()
    }

    fn check_inputs<I: Borrow<EgoAeIndex>>(&self, indices: &[I], x: &Array2<f64>) -> Result<(), ModelError> {
        if indices.len() != self.num_templates() {
            return Err(ModelError::Shape(format!(
                "model has {} template channels, got {} indices",
                self.num_templates(),
                indices.len()
            )));
        }
        for (l, idx) in indices.iter().enumerate() {
            let idx = idx.borrow();
            if idx.num_orbits() != self.orbit_counts[l] {
                return Err(ModelError::Shape(format!(
                    "template {l} has {} orbits, model expects {}",
                    idx.num_orbits(),
                    self.orbit_counts[l]
                )));
            }
            if idx.num_nodes() != x.nrows() {
                return Err(ModelError::Shape(format!(
                    "index {l} covers {} nodes, features have {} rows",
                    idx.num_nodes(),
                    x.nrows()
                )));
            }
        }
        if x.ncols() != self.feature_dim {
            return Err(ModelError::Shape(format!(
                "features have {} columns, model expects {}",
                x.ncols(),
                self.feature_dim
            )));
        }
        Ok(())
    }

    pub fn forward<I: Borrow<EgoAeIndex>>(
        &self,
        indices: &[I],
        x: &Array2<f64>,
        mut mode: Mode<'_>,
    ) -> Result<ForwardTrace, ModelError> {
        self.check_inputs(indices, x)?;
        let mut layers: Vec<LayerTrace> = Vec::with_capacity(self.config.layers);
        for (k, lp) in self.params.layers.iter().enumerate() {
            let mut channels = Vec::with_capacity(indices.len());
            for (l, idx) in indices.iter().enumerate() {
                let input = self.channel_input(&layers, x, l);
                let aggregated = aggregate_sum(input, idx.borrow(), &lp.beta[l])?;
                let mlp = &lp.mlps[l];
                let hidden_pre = mlp.hidden.forward(&aggregated);
                let hidden = relu(&hidden_pre);
                let out_pre = mlp.out.forward(&hidden);
                let embedding = relu(&out_pre);
                channels.push(ChannelTrace {
                    aggregated,
                    hidden_pre,
                    hidden,
                    out_pre,
                    embedding,
                });
            }
            let tables: Vec<&Array2<f64>> = channels.iter().map(|c| &c.embedding).collect();
            let gamma = pool(&tables);
            let se_hidden_pre = lp.se_w1.dot(&gamma);
            let se_hidden = relu1(&se_hidden_pre);
            let se_out_pre = lp.se_w2.dot(&se_hidden);
            let alpha = match self.config.fusion {
                Fusion::SqueezeExcite => relu1(&se_out_pre),
                Fusion::Sum => Array1::ones(tables.len()),
            };
            let fused = fuse(&tables, &alpha)?;
            if fused.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite(format!("layer {}", k + 1)));
            }
            let (output, dropout_scale) = match &mut mode {
                Mode::Train(rng) if self.config.dropout > 0.0 => {
                    let p = self.config.dropout;
                    let keep = 1.0 / (1.0 - p);
                    let scale = Array2::from_shape_simple_fn(fused.raw_dim(), || {
                        if rng.random::<f64>() < p { 0.0 } else { keep }
                    });
                    (&fused * &scale, Some(scale))
                }
                _ => (fused.clone(), None),
            };
            layers.push(LayerTrace {
                channels,
                gamma,
                se_hidden_pre,
                se_hidden,
                se_out_pre,
                alpha,
                fused,
                dropout_scale,
                output,
            });
        }
        let last = &layers.last().expect("layers >= 1").output;
        let head_pre = self.params.head.hidden.forward(last);
        let head_hidden = relu(&head_pre);
        let logits = self.params.head.out.forward(&head_hidden);
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("logits".into()));
        }
        Ok(ForwardTrace {
            layers,
            head_pre,
            head_hidden,
            logits,
        })
    }

    fn channel_input<'a>(&self, layers: &'a [LayerTrace], x: &'a Array2<f64>, l: usize) -> &'a Array2<f64> {
        match layers.last() {
            None => x,
            Some(prev) => match self.config.channel_input {
                ChannelInput::Fused => &prev.output,
                ChannelInput::PerChannel => &prev.channels[l].embedding,
            },
        }
    }

    /// Mean softmax cross-entropy over `train_nodes` plus `λ/2 · Σ w²`.
    pub fn loss(&self, trace: &ForwardTrace, labels: &LabelVector, train_nodes: &[NodeId]) -> f64 {
        cross_entropy(&trace.logits, labels, train_nodes).0 + self.l2_penalty()
    }

    pub fn l2_penalty(&self) -> f64 {
        self.config.l2 * self.params.half_sq_norm_of_weights()
    }

    /// Loss and the gradient of every parameter for a trace produced by [`GrapeModel::forward`]
    /// on the same inputs.
    pub fn loss_and_gradients<I: Borrow<EgoAeIndex>>(
        &self,
        trace: &ForwardTrace,
        indices: &[I],
        x: &Array2<f64>,
        labels: &LabelVector,
        train_nodes: &[NodeId],
    ) -> Result<(f64, Params), ModelError> {
        self.check_inputs(indices, x)?;
        let (ce, dlogits) = cross_entropy(&trace.logits, labels, train_nodes);
        let loss = ce + self.l2_penalty();
        let mut grads = self.params.zeros_like();

        // Head.
        let head = &self.params.head;
        let mut dhead = head.out.backward(&trace.head_hidden, &dlogits, &mut grads.head.out);
        relu_backward(&trace.head_pre, &mut dhead);
        let last_out = &trace.layers.last().expect("layers >= 1").output;
        let mut d_out = head.hidden.backward(last_out, &dhead, &mut grads.head.hidden);

        let num_templates = indices.len();
        // Gradient reaching each channel embedding from the next layer (per-channel mode).
        let mut d_channel_next: Vec<Option<Array2<f64>>> = vec![None; num_templates];

        for k in (0..self.params.layers.len()).rev() {
            let lt = &trace.layers[k];
            let lp = &self.params.layers[k];
            let gp = &mut grads.layers[k];
            let d_fused = match &lt.dropout_scale {
                Some(scale) => &d_out * scale,
                None => d_out,
            };

            // Fusion and squeeze-and-excitation.
            let mut d_emb: Vec<Array2<f64>> = lt
                .channels
                .iter()
                .zip(&lt.alpha)
                .map(|(c, &a)| {
                    debug_assert_eq!(c.embedding.raw_dim(), d_fused.raw_dim());
                    &d_fused * a
                })
                .collect();
            if self.config.fusion == Fusion::SqueezeExcite {
                let d_alpha: Array1<f64> = lt
                    .channels
                    .iter()
                    .map(|c| (&c.embedding * &d_fused).sum())
                    .collect();
                let d_out_pre = Zip::from(&d_alpha)
                    .and(&lt.se_out_pre)
                    .map_collect(|&g, &p| if p > 0.0 { g } else { 0.0 });
                gp.se_w2 += &outer(&d_out_pre, &lt.se_hidden);
                let d_hidden = lp.se_w2.t().dot(&d_out_pre);
                let d_hidden_pre = Zip::from(&d_hidden)
                    .and(&lt.se_hidden_pre)
                    .map_collect(|&g, &p| if p > 0.0 { g } else { 0.0 });
                gp.se_w1 += &outer(&d_hidden_pre, &lt.gamma);
                let d_gamma = lp.se_w1.t().dot(&d_hidden_pre);
                for (l, d) in d_emb.iter_mut().enumerate() {
                    let per_entry = d_gamma[l] / d.len() as f64;
                    d.mapv_inplace(|x| x + per_entry);
                }
            }

            let mut d_prev_out: Option<Array2<f64>> = None;
            let mut d_channel_prev: Vec<Option<Array2<f64>>> = vec![None; num_templates];
            for (l, ((c, mut d), idx)) in lt.channels.iter().zip(d_emb).zip(indices).enumerate() {
                if let Some(extra) = d_channel_next[l].take() {
                    d += &extra;
                }
                let mlp = &lp.mlps[l];
                let gm = &mut gp.mlps[l];
                relu_backward(&c.out_pre, &mut d);
                let mut d_hidden = mlp.out.backward(&c.hidden, &d, &mut gm.out);
                relu_backward(&c.hidden_pre, &mut d_hidden);
                let d_agg = mlp.hidden.backward(&c.aggregated, &d_hidden, &mut gm.hidden);

                let input = self.channel_input(&trace.layers[..k], x, l);
                let need_input_grad = k > 0;
                let d_input = aggregate_backward(
                    input,
                    idx.borrow(),
                    &lp.beta[l],
                    &d_agg,
                    &mut gp.beta[l],
                    need_input_grad,
                );
                if let Some(d_input) = d_input {
                    match self.config.channel_input {
                        ChannelInput::Fused => match &mut d_prev_out {
                            Some(acc) => *acc += &d_input,
                            None => d_prev_out = Some(d_input),
                        },
                        ChannelInput::PerChannel => d_channel_prev[l] = Some(d_input),
                    }
                }
            }
            d_channel_next = d_channel_prev;
            d_out = d_prev_out.unwrap_or_else(|| Array2::zeros(last_out.raw_dim()));
        }

        if !self.config.learn_orbit_weights {
            for layer in &mut grads.layers {
                for b in &mut layer.beta {
                    b.fill(0.0);
                }
            }
        }
        // L2 on weight matrices.
        let lambda = self.config.l2;
        if lambda > 0.0 {
            let mut params = self.params.clone();
            for ((_, kind, g), (_, _, p)) in grads.tensors_mut().into_iter().zip(params.tensors_mut()) {
                if kind == TensorKind::Weight {
                    for (gi, pi) in g.iter_mut().zip(p.iter()) {
                        *gi += lambda * pi;
                    }
                }
            }
        }
        Ok((loss, grads))
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

/// Reverse of [`aggregate_sum`]: accumulates `d beta` and optionally returns `d h_prev`.
fn aggregate_backward(
    h_prev: &Array2<f64>,
    idx: &EgoAeIndex,
    beta: &Array1<f64>,
    d_agg: &Array2<f64>,
    d_beta: &mut Array1<f64>,
    need_input_grad: bool,
) -> Option<Array2<f64>> {
    let mut d_input = need_input_grad.then(|| Array2::zeros(h_prev.raw_dim()));
    for (v, dz) in d_agg.rows().into_iter().enumerate() {
        for (j, set) in idx.ae_sets(v).iter().enumerate() {
            let mut acc = 0.0;
            for &u in set {
                acc += dz.dot(&h_prev.row(u));
                if let Some(di) = &mut d_input {
                    di.row_mut(u).scaled_add(beta[j], &dz);
                }
            }
            d_beta[j] += acc;
        }
    }
    d_input
}

/// Mean cross-entropy over `nodes` and its gradient with respect to the logits.
pub fn cross_entropy(logits: &Array2<f64>, labels: &LabelVector, nodes: &[NodeId]) -> (f64, Array2<f64>) {
    let mut grad = Array2::zeros(logits.raw_dim());
    if nodes.is_empty() {
        return (0.0, grad);
    }
    let scale = 1.0 / nodes.len() as f64;
    let mut loss = 0.0;
    for &v in nodes {
        let row = logits.row(v);
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let exp: Array1<f64> = row.mapv(|x| (x - max).exp());
        let sum = exp.sum();
        let y = labels.get(v);
        loss -= (exp[y] / sum).ln() * scale;
        let mut g = grad.row_mut(v);
        for c in 0..exp.len() {
            g[c] = (exp[c] / sum - if c == y { 1.0 } else { 0.0 }) * scale;
        }
    }
    (loss, grad)
}

#[cfg(test)]
mod tests;
