use approx::assert_abs_diff_eq;
use ndarray::{array, Array1, Array2};

use super::mpnn::mpnn_forward;
use super::*;
use crate::graph::{make_split, Graph};
use crate::matcher::{build_index, MatchOptions};
use crate::templates::catalogue::*;

fn complete(n: usize) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j));
        }
    }
    Graph::new(n, &edges, false)
}

fn star3() -> Graph {
    Graph::new(4, &[(0, 1), (0, 2), (0, 3)], false)
}

#[test]
fn aggregate_of_zero_table_is_mlp_of_zero() {
    let g = star3();
    let idx = build_index(&g, &s1(), &MatchOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mlp = TwoLayer::init(2, 4, 3, &mut rng);
    let out = aggregate_ae(&Array2::zeros((4, 2)), &idx, &array![0.7, 0.2], &mlp).unwrap();
    let zero_row = relu(&mlp.out.forward(&relu(&mlp.hidden.forward(&Array2::<f64>::zeros((1, 2))))));
    for row in out.rows() {
        assert_eq!(row, zero_row.row(0));
    }
}

#[test]
fn edge_template_reduces_to_sum_aggregation() {
    let g = star3();
    let idx = build_index(&g, &s1(), &MatchOptions::default()).unwrap();
    let h = array![[1.0, 2.0], [0.5, 0.0], [0.25, 1.0], [2.0, 3.0]];
    let out = aggregate_ae(&h, &idx, &array![1.0, 1.0], &TwoLayer::identity(2)).unwrap();
    assert_eq!(out.row(0).to_vec(), vec![3.75, 6.0]);
    // Leaf 1: itself plus the center.
    assert_eq!(out.row(1).to_vec(), vec![1.5, 2.0]);
}

#[test]
fn anchor_only_weights_pass_self_features() {
    let g = complete(4);
    let idx = build_index(&g, &s3(), &MatchOptions::default()).unwrap();
    let h = array![[1.0, 0.0], [0.0, 2.0], [3.0, 1.0], [0.5, 0.5]];
    let out = aggregate_ae(&h, &idx, &array![1.0, 0.0], &TwoLayer::identity(2)).unwrap();
    assert_eq!(out, h);
}

#[test]
fn aggregate_shape_errors() {
    let idx = build_index(&star3(), &s1(), &MatchOptions::default()).unwrap();
    assert!(aggregate_sum(&Array2::zeros((3, 2)), &idx, &array![1.0, 1.0]).is_err());
    assert!(aggregate_sum(&Array2::zeros((4, 2)), &idx, &array![1.0]).is_err());
}

#[test]
fn se_identity_and_constants() {
    let h1 = Array2::from_elem((5, 3), 1.0);
    let h3 = Array2::from_elem((5, 3), 3.0);
    let eye = Array2::eye(2);
    let alpha = se_weights(&[&h1, &h3], &eye, &eye);
    assert_eq!(alpha.to_vec(), vec![1.0, 3.0]);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let w1 = Array2::from_shape_simple_fn((2, 2), || rng.random_range(-1.0..1.0));
        let w2 = Array2::from_shape_simple_fn((2, 2), || rng.random_range(-1.0..1.0));
        assert!(se_weights(&[&h1, &h3], &w1, &w2).iter().all(|&a| a >= 0.0));
    }
}

#[test]
fn fuse_is_linear() {
    let e = array![[1.0, 2.0], [3.0, 4.0]];
    assert_eq!(fuse(&[&e], &array![1.0]).unwrap(), e);
    assert_eq!(fuse(&[&e, &e], &array![0.0, 0.0]).unwrap(), Array2::<f64>::zeros((2, 2)));
    assert_eq!(fuse(&[&e, &e], &array![2.0, 1.0]).unwrap(), &e * 3.0);
    assert!(fuse(&[&e], &array![1.0, 2.0]).is_err());
}

/// Single layer, single edge template, identity parameters on the path 0-1.
#[test]
fn hand_computed_single_layer_forward() {
    let g = Graph::new(2, &[(0, 1)], false);
    let idx = build_index(&g, &s1(), &MatchOptions::default()).unwrap();
    let x = array![[1.0, 2.0], [3.0, 0.5]];
    let config = ModelConfig {
        layers: 1,
        hidden: 2,
        dropout: 0.0,
        se_init_noise: 0.0,
        ..ModelConfig::default()
    };
    let mut model = GrapeModel::new(config, &[&idx], 2, 2).unwrap();
    model.params.layers[0].beta[0] = array![1.0, 1.0];
    model.params.layers[0].mlps[0] = TwoLayer::identity(2);
    model.params.head = TwoLayer::identity(2);
    let trace = model.forward(&[&idx], &x, Mode::Eval).unwrap();
    // Both nodes aggregate to X[0] + X[1] = (4, 2.5); gamma = mean = 3.25.
    assert_abs_diff_eq!(trace.layers[0].alpha[0], 3.25, epsilon = 1e-12);
    let expected = array![[13.0, 8.125], [13.0, 8.125]];
    assert!(max_abs_diff(trace.embeddings(), &expected) < 1e-12);
    assert!(max_abs_diff(&trace.logits, &expected) < 1e-12);
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn small_instance(seed: u64) -> (Graph, Vec<EgoAeIndex>, Array2<f64>, LabelVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 12;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < 0.35 {
                edges.push((i, j));
            }
        }
    }
    let g = Graph::new(n, &edges, false);
    let indices = vec![
        build_index(&g, &s1(), &MatchOptions::default()).unwrap(),
        build_index(&g, &s3(), &MatchOptions::default()).unwrap(),
    ];
    let x = Array2::from_shape_simple_fn((n, 3), || rng.random_range(0.0..1.0));
    let labels = LabelVector::new((0..n).map(|v| v % 3).collect());
    (g, indices, x, labels)
}

#[test]
fn eval_forward_is_deterministic() {
    let (_, indices, x, _) = small_instance(1);
    let model = GrapeModel::new(ModelConfig { hidden: 8, ..Default::default() }, &indices, 3, 3).unwrap();
    let a = model.forward(&indices, &x, Mode::Eval).unwrap();
    let b = model.forward(&indices, &x, Mode::Eval).unwrap();
    assert_eq!(a.logits, b.logits);
    assert!(a.alphas().iter().flatten().all(|&v| v >= 0.0));
}

#[test]
fn uniform_logits_give_log_c() {
    let (_, indices, x, labels) = small_instance(2);
    let config = ModelConfig { hidden: 4, ..Default::default() };
    let mut model = GrapeModel::new(config, &indices, 3, 3).unwrap();
    model.params.head.out.w.fill(0.0);
    model.params.head.out.b.fill(0.0);
    let trace = model.forward(&indices, &x, Mode::Eval).unwrap();
    let nodes: Vec<_> = (0..12).collect();
    let loss = model.loss(&trace, &labels, &nodes);
    assert_abs_diff_eq!(loss, 3f64.ln() + model.l2_penalty(), epsilon = 1e-12);

    model.config.l2 = 0.0;
    assert_eq!(model.l2_penalty(), 0.0);
    assert_abs_diff_eq!(model.loss(&trace, &labels, &nodes), 3f64.ln(), epsilon = 1e-12);
}

fn finite_difference_check(config: ModelConfig, seed: u64) -> f64 {
    let (_, indices, x, labels) = small_instance(seed);
    let model = GrapeModel::new(config, &indices, 3, 3).unwrap();
    let train: Vec<_> = (0..8).collect();
    let trace = model.forward(&indices, &x, Mode::Eval).unwrap();
    let (_, grads) = model.loss_and_gradients(&trace, &indices, &x, &labels, &train).unwrap();
    let analytic: Vec<f64> = grads.tensors().into_iter().flat_map(|(_, _, v)| v).collect();
    let eps = 1e-5;
    let loss_at = |params: &Params| {
        let mut m = model.clone();
        m.params = params.clone();
        let t = m.forward(&indices, &x, Mode::Eval).unwrap();
        m.loss(&t, &labels, &train)
    };
    let mut worst: f64 = 0.0;
    let mut flat_index = 0;
    let tensor_lens: Vec<usize> = model.params.tensors().iter().map(|(_, _, v)| v.len()).collect();
    for (t, len) in tensor_lens.into_iter().enumerate() {
        for i in 0..len {
            let mut plus = model.params.clone();
            plus.tensors_mut()[t].2[i] += eps;
            let mut minus = model.params.clone();
            minus.tensors_mut()[t].2[i] -= eps;
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps);
            let a = analytic[flat_index];
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((a - numeric).abs() / denom);
            flat_index += 1;
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    let config = ModelConfig { hidden: 4, dropout: 0.0, l2: 1e-2, ..Default::default() };
    assert!(finite_difference_check(config, 5) < 1e-4);
}

#[test]
fn per_channel_gradients_match_finite_differences() {
    let config = ModelConfig {
        hidden: 4,
        dropout: 0.0,
        channel_input: ChannelInput::PerChannel,
        ..Default::default()
    };
    assert!(finite_difference_check(config, 6) < 1e-4);
}

#[test]
fn sum_fusion_gradients_match_finite_differences() {
    let config = ModelConfig {
        hidden: 4,
        dropout: 0.0,
        fusion: Fusion::Sum,
        layers: 3,
        ..Default::default()
    };
    assert!(finite_difference_check(config, 7) < 1e-4);
}

#[test]
fn two_star_toy_trains_to_perfect_accuracy() {
    // Two stars per class; class decided by a feature shared by the whole star.
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    let mut feats = Vec::new();
    for star in 0..4 {
        let center = star * 6;
        let class = star % 2;
        for leaf in 1..6 {
            edges.push((center, center + leaf));
        }
        for _ in 0..6 {
            labels.push(class);
            feats.extend(if class == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
        }
    }
    let g = Graph::new(24, &edges, false);
    let idx = build_index(&g, &s1(), &MatchOptions::default()).unwrap();
    let x = Array2::from_shape_vec((24, 2), feats).unwrap();
    let labels = LabelVector::new(labels);
    let split = make_split(24, 0).unwrap();
    let config = ModelConfig { hidden: 16, max_epochs: 200, ..Default::default() };
    let mut model = GrapeModel::new(config, &[&idx], 2, 2).unwrap();
    let report = train(&mut model, &[&idx], &x, &labels, &split).unwrap();
    assert_eq!(report.test_acc, 1.0);
    assert!(report.epochs_run <= 200);

    let mut again = GrapeModel::new(model.config.clone(), &[&idx], 2, 2).unwrap();
    let report2 = train(&mut again, &[&idx], &x, &labels, &split).unwrap();
    assert_eq!(report.log, report2.log);
}

#[test]
fn mpnn_on_regular_graph_is_uniform() {
    let cycle: Vec<_> = (0..7).map(|i| (i, (i + 1) % 7)).collect();
    let g = Graph::new(7, &cycle, false);
    let x = Array2::ones((7, 2));
    for h in mpnn_forward(&g, &x, 3, 8, 1).unwrap() {
        for row in h.rows() {
            assert_eq!(row, h.row(0));
        }
    }
}

#[test]
fn mpnn_separates_star_center_from_leaf() {
    let x = Array2::ones((4, 1));
    let h = mpnn_forward(&star3(), &x, 1, 8, 4).unwrap();
    assert_ne!(h[0].row(0), h[0].row(1));
}

#[test]
fn config_validation_and_grid() {
    assert!(ModelConfig { layers: 0, ..Default::default() }.validate().is_err());
    assert!(ModelConfig { dropout: 1.0, ..Default::default() }.validate().is_err());
    let grid = ModelConfig::grid(&ModelConfig::default());
    assert_eq!(grid.len(), 16);
    let c = ModelConfig::default();
    assert_eq!(c.lr_at(0), 0.01);
    assert_eq!(c.lr_at(99), 0.01);
    assert_eq!(c.lr_at(100), 0.005);
    assert_eq!(c.lr_at(250), 0.0025);
}

#[test]
fn forward_shape_errors() {
    let (_, indices, x, _) = small_instance(3);
    let model = GrapeModel::new(ModelConfig::default(), &indices, 3, 3).unwrap();
    assert!(model.forward(&indices[..1], &x, Mode::Eval).is_err());
    assert!(model.forward(&indices, &Array2::zeros((12, 2)), Mode::Eval).is_err());
    let _: Array1<f64> = array![0.0];
}
