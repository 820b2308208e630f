use serde::{Deserialize, Serialize};

use super::graph::{GraphOperator, NeighborhoodNorm};
use super::layers::{GatCache, GatLayer, GcnCache, GcnLayer, LinearHead};
use super::matrix::DenseMatrix;
use super::normalize::Normalizer;
use super::train::Estimator;
use crate::rng::Rng;
use crate::{Error, Result};

/// Node features per bus: voltage magnitude and angle.
pub const NODE_FEATURES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub hidden: usize,
    pub gcn_layers: usize,
    pub gat_layers: usize,
    pub leaky_slope: f64,
    pub norm: NeighborhoodNorm,
}

impl Default for GnnConfig {
    fn default() -> Self {
        GnnConfig { hidden: 64, gcn_layers: 5, gat_layers: 1, leaky_slope: 0.2, norm: NeighborhoodNorm::SelfInclusive }
    }
}

impl GnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.gcn_layers + self.gat_layers == 0 {
            return Err(Error::Config("graph network needs a positive width and at least one hidden layer".into()));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::Config(format!("leaky slope must lie in (0, 1), got {}", self.leaky_slope)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphLayer {
    Gcn(GcnLayer),
    Gat(GatLayer),
}

/// GCN stack, then GAT stack, then a per-node linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub config: GnnConfig,
    pub layers: Vec<GraphLayer>,
    pub head: LinearHead,
    pub normalizer: Option<Normalizer>,
}

enum LayerCache {
    Gcn(GcnCache),
    Gat(GatCache),
}

pub struct GnnTape {
    caches: Vec<LayerCache>,
    last_hidden: DenseMatrix,
}

impl GnnTape {
    /// Attention cache of the `k`-th GAT layer.
    pub fn gat_cache(&self, k: usize) -> Option<&GatCache> {
        self.caches
            .iter()
            .filter_map(|c| match c {
                LayerCache::Gat(g) => Some(g),
                LayerCache::Gcn(_) => None,
            })
            .nth(k)
    }
}

impl GnnModel {
    pub fn new(config: GnnConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut layers = Vec::new();
        let mut d_in = NODE_FEATURES;
        for _ in 0..config.gcn_layers {
            layers.push(GraphLayer::Gcn(GcnLayer::init(d_in, config.hidden, rng)));
            d_in = config.hidden;
        }
        for _ in 0..config.gat_layers {
            layers.push(GraphLayer::Gat(GatLayer::init(d_in, config.hidden, config.leaky_slope, rng)));
            d_in = config.hidden;
        }
        let head = LinearHead::init(d_in, NODE_FEATURES, rng);
        Ok(GnnModel { config, layers, head, normalizer: None })
    }

    pub fn operator(&self, adj: &crate::grid::AdjacencyMatrix) -> GraphOperator {
        GraphOperator::new(adj, self.config.norm)
    }

    /// Forward pass on `(batch · n) × 2` normalized node features.
    pub fn forward(&self, x: &DenseMatrix, op: &GraphOperator) -> Result<DenseMatrix> {
        Ok(self.forward_with_tape(x, op)?.0)
    }

    pub fn forward_with_tape(&self, x: &DenseMatrix, op: &GraphOperator) -> Result<(DenseMatrix, GnnTape)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let (out, cache) = match layer {
                GraphLayer::Gcn(l) => {
                    let (o, c) = l.forward(&h, op)?;
                    (o, LayerCache::Gcn(c))
                }
                GraphLayer::Gat(l) => {
                    let (o, c) = l.forward(&h, op)?;
                    (o, LayerCache::Gat(c))
                }
            };
            caches.push(cache);
            h = out;
        }
        let y = self.head.forward(&h)?;
        Ok((y, GnnTape { caches, last_hidden: h }))
    }

    /// Reverse-mode pass; parameter gradients accumulate into `grad`.
    pub fn backward(&self, d_y: &DenseMatrix, tape: &GnnTape, op: &GraphOperator, grad: &mut GnnModel) {
        let mut d = self.head.backward(d_y, &tape.last_hidden, &mut grad.head);
        for ((layer, cache), g) in self.layers.iter().zip(&tape.caches).zip(grad.layers.iter_mut()).rev() {
            d = match (layer, cache, g) {
                (GraphLayer::Gcn(l), LayerCache::Gcn(c), GraphLayer::Gcn(g)) => l.backward(&d, c, op, g),
                (GraphLayer::Gat(l), LayerCache::Gat(c), GraphLayer::Gat(g)) => l.backward(&d, c, op, g),
                _ => unreachable!("gradient model mirrors the layer stack"),
            };
        }
    }

    pub fn zeros_like(&self) -> Self {
        GnnModel {
            config: self.config.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| match l {
                    GraphLayer::Gcn(g) => GraphLayer::Gcn(g.zeros_like()),
                    GraphLayer::Gat(g) => GraphLayer::Gat(g.zeros_like()),
                })
                .collect(),
            head: self.head.zeros_like(),
            normalizer: None,
        }
    }

    /// Parameter blocks in file order with their names and shapes.
    pub fn named_params(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                GraphLayer::Gcn(l) => out.push((format!("gcn{i}.w"), vec![l.w.rows(), l.w.cols()], l.w.as_slice())),
                GraphLayer::Gat(l) => {
                    out.push((format!("gat{i}.w"), vec![l.w.rows(), l.w.cols()], l.w.as_slice()));
                    out.push((format!("gat{i}.a"), vec![l.a.len()], &l.a[..]));
                }
            }
        }
        out.push(("head.w".into(), vec![self.head.w.rows(), self.head.w.cols()], self.head.w.as_slice()));
        out.push(("head.b".into(), vec![self.head.b.len()], &self.head.b[..]));
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            match layer {
                GraphLayer::Gcn(l) => out.push(l.w.as_mut_slice()),
                GraphLayer::Gat(l) => {
                    out.push(l.w.as_mut_slice());
                    out.push(&mut l.a[..]);
                }
            }
        }
        out.push(self.head.w.as_mut_slice());
        out.push(&mut self.head.b[..]);
        out
    }
}

impl Estimator for GnnModel {
    type Context = GraphOperator;

    fn normalizer(&self) -> Option<&Normalizer> {
        self.normalizer.as_ref()
    }

    fn set_normalizer(&mut self, norm: Normalizer) {
        self.normalizer = Some(norm);
    }

    fn forward_batch(&self, op: &GraphOperator, inputs: &DenseMatrix) -> Result<DenseMatrix> {
        let x = reshape_nodes(inputs, op.n())?;
        let y = self.forward(&x, op)?;
        DenseMatrix::from_vec(inputs.rows(), inputs.cols(), y.into_vec())
    }

    fn loss_and_grad(&self, op: &GraphOperator, inputs: &DenseMatrix, labels: &DenseMatrix, weights: &[f64], grad: &mut Self) -> Result<f64> {
        let x = reshape_nodes(inputs, op.n())?;
        let (y, tape) = self.forward_with_tape(&x, op)?;
        let target = reshape_nodes(labels, op.n())?;
        let (loss, d_y) = super::loss_mse_weighted(&y, &target, weights)?;
        self.backward(&d_y, &tape, op, grad);
        Ok(loss)
    }

    fn zeros_like(&self) -> Self {
        GnnModel::zeros_like(self)
    }

    fn params(&self) -> Vec<&[f64]> {
        self.named_params().into_iter().map(|(_, _, p)| p).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        GnnModel::params_mut(self)
    }
}

/// `batch × 2n` flattened samples to `(batch · n) × 2` node rows.
pub(crate) fn reshape_nodes(m: &DenseMatrix, n: usize) -> Result<DenseMatrix> {
    if m.cols() != NODE_FEATURES * n {
        return Err(Error::Shape(format!("expected {} values per sample for {n} nodes, got {}", NODE_FEATURES * n, m.cols())));
    }
    DenseMatrix::from_vec(m.rows() * n, NODE_FEATURES, m.as_slice().to_vec())
}
