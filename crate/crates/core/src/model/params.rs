use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Affine map `x -> x·w + b`, `w` stored as `in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    /// Fan-in scaled uniform initialization in `±1/sqrt(in)`.
    pub fn init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        Self {
            w: Array2::from_shape_simple_fn((inputs, outputs), || rng.random_range(-bound..bound)),
            b: Array1::from_shape_simple_fn(outputs, || rng.random_range(-bound..bound)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            w: Array2::eye(dim),
            b: Array1::zeros(dim),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w: Array2::zeros(self.w.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub(crate) fn backward(&self, x: &Array2<f64>, dy: &Array2<f64>, grad: &mut Dense) -> Array2<f64> {
        grad.w += &x.t().dot(dy);
        grad.b += &dy.sum_axis(Axis(0));
        dy.dot(&self.w.t())
    }

    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }
}

/// Two affine maps with a ReLU in between: `out(relu(hidden(x)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLayer {
    pub hidden: Dense,
    pub out: Dense,
}

impl TwoLayer {
    pub fn init(inputs: usize, hidden: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        Self {
            hidden: Dense::init(inputs, hidden, rng),
            out: Dense::init(hidden, outputs, rng),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            hidden: Dense::identity(dim),
            out: Dense::identity(dim),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            hidden: self.hidden.zeros_like(),
            out: self.out.zeros_like(),
        }
    }
}

/// Parameters of one AE-aware layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    /// `beta[l][j]`: weight of orbit `j` of template `l`.
    pub beta: Vec<Array1<f64>>,
    /// Per-template MLP.
    pub mlps: Vec<TwoLayer>,
    pub se_w1: Array2<f64>,
    pub se_w2: Array2<f64>,
}

/// Every learnable tensor of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub layers: Vec<LayerParams>,
    pub head: TwoLayer,
}

/// What kind of tensor a flat view refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    /// Weight matrix: L2-penalized.
    Weight,
    Bias,
    OrbitWeight,
}

impl Params {
    pub fn init(
        feature_dim: usize,
        hidden: usize,
        num_classes: usize,
        orbit_counts: &[usize],
        layers: usize,
        se_noise: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let num_templates = orbit_counts.len();
        let noise = Normal::new(0.0, se_noise.max(f64::MIN_POSITIVE)).expect("valid sigma");
        let mut layer_params = Vec::with_capacity(layers);
        for k in 0..layers {
            let inputs = if k == 0 { feature_dim } else { hidden };
            let beta = orbit_counts
                .iter()
                .map(|&m| Array1::from_elem(m, 1.0 / m as f64))
                .collect();
            let mlps = (0..num_templates)
                .map(|_| TwoLayer::init(inputs, hidden, hidden, rng))
                .collect();
            let se = |rng: &mut _| {
                let mut w = Array2::<f64>::eye(num_templates);
                if se_noise > 0.0 {
                    w.mapv_inplace(|x| x + noise.sample(rng));
                }
                w
            };
            let se_w1 = se(rng);
            let se_w2 = se(rng);
            layer_params.push(LayerParams {
                beta,
                mlps,
                se_w1,
                se_w2,
            });
        }
        let head = TwoLayer::init(hidden, hidden, num_classes, rng);
        Self {
            layers: layer_params,
            head,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    beta: l.beta.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
                    mlps: l.mlps.iter().map(TwoLayer::zeros_like).collect(),
                    se_w1: Array2::zeros(l.se_w1.raw_dim()),
                    se_w2: Array2::zeros(l.se_w2.raw_dim()),
                })
                .collect(),
            head: self.head.zeros_like(),
        }
    }

    /// Flat mutable views of every tensor, in a fixed order.
    pub fn tensors_mut(&mut self) -> Vec<(String, TensorKind, &mut [f64])> {
        fn dense<'a>(out: &mut Vec<(String, TensorKind, &'a mut [f64])>, name: String, d: &'a mut Dense) {
            out.push((format!("{name}.w"), TensorKind::Weight, d.w.as_slice_mut().expect("contiguous")));
            out.push((format!("{name}.b"), TensorKind::Bias, d.b.as_slice_mut().expect("contiguous")));
        }
        let mut out = Vec::new();
        for (k, layer) in self.layers.iter_mut().enumerate() {
            for (l, beta) in layer.beta.iter_mut().enumerate() {
                out.push((
                    format!("layer{k}.beta{l}"),
                    TensorKind::OrbitWeight,
                    beta.as_slice_mut().expect("contiguous"),
                ));
            }
            for (l, mlp) in layer.mlps.iter_mut().enumerate() {
                dense(&mut out, format!("layer{k}.mlp{l}.hidden"), &mut mlp.hidden);
                dense(&mut out, format!("layer{k}.mlp{l}.out"), &mut mlp.out);
            }
            out.push((format!("layer{k}.se_w1"), TensorKind::Weight, layer.se_w1.as_slice_mut().expect("contiguous")));
            out.push((format!("layer{k}.se_w2"), TensorKind::Weight, layer.se_w2.as_slice_mut().expect("contiguous")));
        }
        dense(&mut out, "head.hidden".into(), &mut self.head.hidden);
        dense(&mut out, "head.out".into(), &mut self.head.out);
        out
    }

    /// Flat read-only views in the same order as [`Params::tensors_mut`].
    pub fn tensors(&self) -> Vec<(String, TensorKind, Vec<f64>)> {
        let mut copy = self.clone();
        copy.tensors_mut()
            .into_iter()
            .map(|(n, k, s)| (n, k, s.to_vec()))
            .collect()
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|(_, _, v)| v.len()).sum()
    }

    /// `0.5 · Σ w²` over weight matrices.
    pub fn half_sq_norm_of_weights(&self) -> f64 {
        let mut total = 0.0;
        let mut add = |a: &Array2<f64>| total += 0.5 * a.iter().map(|x| x * x).sum::<f64>();
        for layer in &self.layers {
            for mlp in &layer.mlps {
                add(&mlp.hidden.w);
                add(&mlp.out.w);
            }
            add(&layer.se_w1);
            add(&layer.se_w2);
        }
        add(&self.head.hidden.w);
        add(&self.head.out.w);
        total
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, _, v)| v.iter().all(|x| x.is_finite()))
    }
}
