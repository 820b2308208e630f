use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::matrix::DenseMatrix;
use super::normalize::Normalizer;
use crate::powerflow::Dataset;
use crate::{rng, Error, Result};

const SHUFFLE_TAG: u64 = 0x5348_5546;

/// Common surface of the graph network and the MLP baseline, all in
/// normalized units with one flattened sample per row.
pub trait Estimator: Sized {
    type Context;

    fn normalizer(&self) -> Option<&Normalizer>;
    fn set_normalizer(&mut self, norm: Normalizer);
    fn forward_batch(&self, ctx: &Self::Context, inputs: &DenseMatrix) -> Result<DenseMatrix>;
    /// Weighted mean squared error of the batch, `weights` tiling each
    /// flattened sample; gradients accumulate into `grad`.
    fn loss_and_grad(&self, ctx: &Self::Context, inputs: &DenseMatrix, labels: &DenseMatrix, weights: &[f64], grad: &mut Self) -> Result<f64>;
    fn zeros_like(&self) -> Self;
    fn params(&self) -> Vec<&[f64]>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;

    /// Predictions in physical units (vm in pu, va in degrees).
    fn predict(&self, ctx: &Self::Context, features: &[f64]) -> Result<Vec<f64>> {
        let norm = self.normalizer().ok_or_else(|| Error::Config("model has no normalization statistics".into()))?;
        let x = norm.inputs(features)?;
        let w = norm.width();
        let mut out = Vec::with_capacity(x.len());
        for chunk in x.chunks(PREDICT_CHUNK * w) {
            let m = DenseMatrix::from_vec(chunk.len() / w, w, chunk.to_vec())?;
            out.extend(self.forward_batch(ctx, &m)?.into_vec());
        }
        norm.denormalize_outputs(&out)
    }
}

const PREDICT_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 200, batch_size: 32, seed: 0, adam: AdamConfig::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Sample-weighted mean minibatch loss per epoch.
    pub train_loss: Vec<f64>,
    /// Loss on the validation set after each epoch, if one was given.
    pub val_loss: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.train_loss.last().copied()
    }
}

fn gather(values: &[f64], width: usize, idx: &[usize]) -> Result<DenseMatrix> {
    let mut data = Vec::with_capacity(idx.len() * width);
    for &i in idx {
        data.extend_from_slice(&values[i * width..(i + 1) * width]);
    }
    DenseMatrix::from_vec(idx.len(), width, data)
}

/// Normalized MSE of the model over a whole dataset.
pub fn evaluate_loss<M: Estimator>(model: &M, ctx: &M::Context, data: &Dataset) -> Result<f64> {
    evaluate_samples(model, ctx, &data.features, &data.labels)
}

fn evaluate_samples<M: Estimator>(model: &M, ctx: &M::Context, features: &[f64], labels: &[f64]) -> Result<f64> {
    let norm = model.normalizer().ok_or_else(|| Error::Config("model has no normalization statistics".into()))?;
    let x = norm.inputs(features)?;
    let y = norm.outputs(labels)?;
    let w = norm.width();
    let weights = norm.output_weights();
    let mut total = 0.0;
    for (xc, yc) in x.chunks(PREDICT_CHUNK * w).zip(y.chunks(PREDICT_CHUNK * w)) {
        let rows = xc.len() / w;
        let pred = model.forward_batch(ctx, &DenseMatrix::from_vec(rows, w, xc.to_vec())?)?;
        total += pred.as_slice().iter().zip(yc).enumerate().map(|(i, (p, t))| weights[i % w] * (p - t) * (p - t)).sum::<f64>();
    }
    let active: f64 = weights.iter().sum::<f64>() * (x.len() / w) as f64;
    Ok(if active > 0.0 { total / active } else { 0.0 })
}

/// Fits normalization on `train`, then runs minibatch Adam.
pub fn train<M: Estimator>(
    model: &mut M,
    ctx: &M::Context,
    train: &Dataset,
    val: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    train_with(model, ctx, train, val, cfg, |_, _| {})
}

/// Flattened training samples: features, labels and the per-sample width.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub features: &'a [f64],
    pub labels: &'a [f64],
    pub width: usize,
}

impl<'a> From<&'a Dataset> for Samples<'a> {
    fn from(d: &'a Dataset) -> Self {
        Samples { features: &d.features, labels: &d.labels, width: d.sample_len() }
    }
}

/// As [`train`], calling `on_epoch(epoch, loss)` after each epoch.
pub fn train_with<M: Estimator>(
    model: &mut M,
    ctx: &M::Context,
    train: &Dataset,
    val: Option<&Dataset>,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(usize, f64),
) -> Result<TrainReport> {
    train_samples(model, ctx, train.into(), val.map(Samples::from), cfg, on_epoch)
}

pub fn train_samples<M: Estimator>(
    model: &mut M,
    ctx: &M::Context,
    train: Samples<'_>,
    val: Option<Samples<'_>>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainReport> {
    if cfg.batch_size == 0 || !(cfg.adam.lr > 0.0) {
        return Err(Error::Config("batch size and learning rate must be positive".into()));
    }
    let norm = Normalizer::from_samples(train.features, train.labels, train.width)?;
    let x = norm.inputs(train.features)?;
    let y = norm.outputs(train.labels)?;
    let w = norm.width();
    let weights = norm.output_weights();
    model.set_normalizer(norm);

    let n = x.len() / w;
    let shapes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    let mut adam = AdamState::new(cfg.adam, &shapes);
    let mut order: Vec<usize> = (0..n).collect();
    let mut report = TrainReport::default();
    for epoch in 0..cfg.epochs {
        let mut rng = rng::purpose(cfg.seed, SHUFFLE_TAG, epoch as u64);
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let xb = gather(&x, w, idx)?;
            let yb = gather(&y, w, idx)?;
            let mut grad = model.zeros_like();
            let loss = model.loss_and_grad(ctx, &xb, &yb, &weights, &mut grad)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            sum += loss * idx.len() as f64;
            adam.step(model.params_mut(), grad.params());
        }
        let loss = sum / n as f64;
        report.train_loss.push(loss);
        if let Some(v) = val {
            report.val_loss.push(evaluate_samples(model, ctx, v.features, v.labels)?);
        }
        on_epoch(epoch, loss);
    }
    Ok(report)
}
