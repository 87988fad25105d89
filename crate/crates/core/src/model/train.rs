use std::borrow::Borrow;
use std::fmt::Write as _;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{GrapeModel, Mode, Params};
use crate::error::ModelError;
use crate::graph::{LabelVector, Split};
use crate::matcher::EgoAeIndex;

/// Adaptive moment estimation with the usual defaults.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Params,
    v: Params,
    t: i32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(params: &Params) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params, lr: f64) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let mut grads = grads.clone();
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors_mut())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for ((((_, _, p), (_, _, g)), (_, _, m)), (_, _, v)) in tensors {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// Stops once the monitored value has not strictly improved for `patience` epochs.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    patience: usize,
    best: f64,
    best_epoch: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::NEG_INFINITY,
            best_epoch: 0,
        }
    }

    /// Records `value` for `epoch`; returns `true` on a strict improvement.
    pub fn observe(&mut self, epoch: usize, value: f64) -> bool {
        if value > self.best {
            self.best = value;
            self.best_epoch = epoch;
            true
        } else {
            false
        }
    }

    pub fn should_stop(&self, epoch: usize) -> bool {
        epoch >= self.best_epoch + self.patience
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub log: Vec<EpochLog>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    /// Fusion weights per layer at the best-validation parameters.
    pub alphas: Vec<Vec<f64>>,
    /// Orbit weights `[layer][template][orbit]` at the best-validation parameters.
    pub betas: Vec<Vec<Vec<f64>>>,
}

impl TrainReport {
    /// CSV `epoch,train_loss,val_acc,lr`.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_acc,lr\n");
        for e in &self.log {
            let _ = writeln!(out, "{},{},{},{}", e.epoch, e.train_loss, e.val_acc, e.lr);
        }
        out
    }
}

/// Full-batch training with Adam, step learning-rate decay and early stopping
/// on validation accuracy. Leaves the best-validation parameters in `model`.
pub fn train<I: Borrow<EgoAeIndex>>(
    model: &mut GrapeModel,
    indices: &[I],
    x: &Array2<f64>,
    labels: &LabelVector,
    split: &Split,
) -> Result<TrainReport, ModelError> {
    let config = model.config.clone();
    config.validate()?;
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut adam = model.optimizer.take().unwrap_or_else(|| Adam::new(&model.params));
    let mut stopper = EarlyStopper::new(config.patience);
    let mut best_params = model.params.clone();
    let mut log = Vec::new();

    for epoch in 1..=config.max_epochs {
        let lr = config.lr_at(epoch - 1);
        let trace = model.forward(indices, x, Mode::Train(&mut dropout_rng))?;
        let (loss, grads) = model.loss_and_gradients(&trace, indices, x, labels, &split.train)?;
        if !loss.is_finite() {
            return Err(ModelError::Diverged { epoch, loss });
        }
        adam.step(&mut model.params, &grads, lr);
        if !model.params.all_finite() {
            return Err(ModelError::Diverged { epoch, loss: f64::NAN });
        }
        let eval = model.forward(indices, x, Mode::Eval)?;
        let val_acc = eval.accuracy(labels, &split.val);
        log.push(EpochLog {
            epoch,
            train_loss: loss,
            val_acc,
            lr,
        });
        if stopper.observe(epoch, val_acc) {
            best_params = model.params.clone();
        }
        if stopper.should_stop(epoch) {
            break;
        }
    }

    model.params = best_params;
    model.optimizer = Some(adam);
    let eval = model.forward(indices, x, Mode::Eval)?;
    Ok(TrainReport {
        epochs_run: log.len(),
        log,
        best_epoch: stopper.best_epoch(),
        best_val_acc: stopper.best(),
        train_acc: eval.accuracy(labels, &split.train),
        test_acc: eval.accuracy(labels, &split.test),
        alphas: eval.alphas(),
        betas: model
            .params
            .layers
            .iter()
            .map(|l| l.beta.iter().map(|b| b.to_vec()).collect())
            .collect(),
    })
}
