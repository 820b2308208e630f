use serde::{Deserialize, Serialize};

use super::layers::Affine;
use super::matrix::DenseMatrix;
use super::normalize::Normalizer;
use super::train::Estimator;
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig { hidden: vec![200; 6] }
    }
}

/// Fully connected baseline on the flattened feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub layers: Vec<Affine>,
    pub normalizer: Option<Normalizer>,
}

pub struct MlpTape {
    /// Input of each layer (post-activation of the previous one).
    inputs: Vec<DenseMatrix>,
}

impl MlpModel {
    pub fn new(config: MlpConfig, width: usize, rng: &mut Rng) -> Result<Self> {
        if width == 0 || config.hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("MLP layer widths must be positive".into()));
        }
        let mut layers = Vec::new();
        let mut d_in = width;
        for &h in &config.hidden {
            layers.push(Affine::init(d_in, h, rng));
            d_in = h;
        }
        layers.push(Affine::init(d_in, width, rng));
        Ok(MlpModel { config, layers, normalizer: None })
    }

    pub fn width(&self) -> usize {
        self.layers[0].w.rows()
    }

    pub fn forward_with_tape(&self, x: &DenseMatrix) -> Result<(DenseMatrix, MlpTape)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(&h)?;
            if i < last {
                z.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            }
            inputs.push(std::mem::replace(&mut h, z));
        }
        Ok((h, MlpTape { inputs }))
    }

    pub fn backward(&self, d_y: &DenseMatrix, tape: &MlpTape, grad: &mut MlpModel) {
        let mut d = d_y.clone();
        for (i, (layer, g)) in self.layers.iter().zip(grad.layers.iter_mut()).enumerate().rev() {
            let x = &tape.inputs[i];
            d = layer.backward(&d, x, g);
            if i > 0 {
                // x is the ReLU output of the layer below
                for (dv, xv) in d.as_mut_slice().iter_mut().zip(x.as_slice()) {
                    if *xv <= 0.0 {
                        *dv = 0.0;
                    }
                }
            }
        }
    }

    pub fn named_params(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("dense{i}.w"), vec![l.w.rows(), l.w.cols()], l.w.as_slice()));
            out.push((format!("dense{i}.b"), vec![l.b.len()], &l.b[..]));
        }
        out
    }
}

impl Estimator for MlpModel {
    type Context = ();

    fn normalizer(&self) -> Option<&Normalizer> {
        self.normalizer.as_ref()
    }

    fn set_normalizer(&mut self, norm: Normalizer) {
        self.normalizer = Some(norm);
    }

    fn forward_batch(&self, _: &(), inputs: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.forward_with_tape(inputs)?.0)
    }

    fn loss_and_grad(&self, _: &(), inputs: &DenseMatrix, labels: &DenseMatrix, weights: &[f64], grad: &mut Self) -> Result<f64> {
        let (y, tape) = self.forward_with_tape(inputs)?;
        let (loss, d_y) = super::loss_mse_weighted(&y, labels, weights)?;
        self.backward(&d_y, &tape, grad);
        Ok(loss)
    }

    fn zeros_like(&self) -> Self {
        MlpModel { config: self.config.clone(), layers: self.layers.iter().map(Affine::zeros_like).collect(), normalizer: None }
    }

    fn params(&self) -> Vec<&[f64]> {
        self.named_params().into_iter().map(|(_, _, p)| p).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            out.push(l.w.as_mut_slice());
            out.push(&mut l.b[..]);
        }
        out
    }
}
