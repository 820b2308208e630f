//! Graph and feed-forward networks with hand-written backpropagation.

mod adam;
mod gnn;
mod graph;
mod layers;
mod matrix;
mod mlp;
mod model_io;
mod normalize;
mod train;

#[cfg(test)]
mod tests;

pub use adam::{AdamConfig, AdamState};
pub use gnn::{GnnConfig, GnnModel, GnnTape, GraphLayer, NODE_FEATURES};
pub use graph::{GraphOperator, NeighborhoodNorm};
pub use layers::{Affine, GatCache, GatLayer, GcnCache, GcnLayer, LinearHead};
pub use matrix::DenseMatrix;
pub use mlp::{MlpConfig, MlpModel, MlpTape};
pub use model_io::{read_model, write_model, Architecture, BlockInfo, Model, ModelHeader};
pub use normalize::Normalizer;
pub use train::{evaluate_loss, train, train_samples, train_with, Estimator, Samples, TrainConfig, TrainReport};

use crate::{Error, Result};

/// Mean squared error over all entries and its gradient w.r.t. `pred`.
pub fn loss_mse(pred: &DenseMatrix, target: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
    loss_mse_weighted(pred, target, &[1.0])
}

/// Weighted mean squared error; `weights` repeats over the flattened data
/// and the mean is taken over the total weight.
pub fn loss_mse_weighted(pred: &DenseMatrix, target: &DenseMatrix, weights: &[f64]) -> Result<(f64, DenseMatrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!("prediction {:?} vs target {:?}", pred.shape(), target.shape())));
    }
    let len = pred.as_slice().len();
    if weights.is_empty() || len % weights.len() != 0 {
        return Err(Error::Shape(format!("{} weights do not tile {len} outputs", weights.len())));
    }
    let total = weights.iter().sum::<f64>() * (len / weights.len()) as f64;
    let mut grad = pred.clone();
    let mut loss = 0.0;
    if total <= 0.0 {
        grad.fill(0.0);
        return Ok((0.0, grad));
    }
    for (i, (g, t)) in grad.as_mut_slice().iter_mut().zip(target.as_slice()).enumerate() {
        let w = weights[i % weights.len()];
        let d = *g - t;
        loss += w * d * d;
        *g = 2.0 * w * d / total;
    }
    Ok((loss / total, grad))
}
