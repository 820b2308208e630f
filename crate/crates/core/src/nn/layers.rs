//! Layer forward and backward passes over a batch of graphs that share one
//! graph operator. Batched node features are `(batch · n) × d` matrices,
//! sample-major.

use rand::Rng;

use super::graph::GraphOperator;
use super::matrix::{gemm, DenseMatrix};
use crate::{Error, Result};

fn glorot(rows: usize, cols: usize, fan: usize, rng: &mut impl Rng) -> DenseMatrix {
    let bound = (6.0 / fan as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..bound))
}

fn check_cols(x: &DenseMatrix, d: usize, what: &str) -> Result<()> {
    if x.cols() != d {
        return Err(Error::Shape(format!("{what} expects {d} input features, got {}", x.cols())));
    }
    Ok(())
}

fn check_rows(x: &DenseMatrix, n: usize) -> Result<usize> {
    if n == 0 || x.rows() % n != 0 {
        return Err(Error::Shape(format!("{} feature rows is not a whole number of {n}-node graphs", x.rows())));
    }
    Ok(x.rows() / n)
}

fn relu_in_place(z: &mut DenseMatrix) {
    z.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Graph convolution with degree-normalized aggregation and ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer {
    pub w: DenseMatrix,
}

pub struct GcnCache {
    x: DenseMatrix,
    z: DenseMatrix,
}

impl GcnLayer {
    pub fn init(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        GcnLayer { w: glorot(d_in, d_out, d_in + d_out, rng) }
    }

    pub fn zeros_like(&self) -> Self {
        GcnLayer { w: DenseMatrix::zeros(self.w.rows(), self.w.cols()) }
    }

    pub fn d_out(&self) -> usize {
        self.w.cols()
    }

    pub fn forward(&self, x: &DenseMatrix, op: &GraphOperator) -> Result<(DenseMatrix, GcnCache)> {
        check_cols(x, self.w.rows(), "GCN layer")?;
        let batch = check_rows(x, op.n())?;
        let h = x.matmul(&self.w)?;
        let z = aggregate(&h, op, batch);
        let mut out = z.clone();
        relu_in_place(&mut out);
        Ok((out, GcnCache { x: x.clone(), z }))
    }

    /// Accumulates parameter gradients into `grad`, returns the input gradient.
    pub fn backward(&self, d_out: &DenseMatrix, cache: &GcnCache, op: &GraphOperator, grad: &mut GcnLayer) -> DenseMatrix {
        let batch = cache.x.rows() / op.n();
        let mut dz = d_out.clone();
        for (g, &z) in dz.as_mut_slice().iter_mut().zip(cache.z.as_slice()) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        let dh = aggregate_transpose(&dz, op, batch);
        gemm(1.0, &cache.x, true, &dh, false, 1.0, &mut grad.w);
        let mut dx = DenseMatrix::zeros(cache.x.rows(), cache.x.cols());
        gemm(1.0, &dh, false, &self.w, true, 0.0, &mut dx);
        dx
    }
}

/// `Z[s, v] = Σ_{u ∈ N(v) ∪ {v}} c_vu · H[s, u]`
fn aggregate(h: &DenseMatrix, op: &GraphOperator, batch: usize) -> DenseMatrix {
    let n = op.n();
    let d = h.cols();
    let mut z = DenseMatrix::zeros(h.rows(), d);
    for s in 0..batch {
        for v in 0..n {
            let zv = z.row_mut(s * n + v);
            for slot in op.slots(v) {
                let c = op.coeff(slot);
                let hu = h.row(s * n + op.node(slot));
                for (a, b) in zv.iter_mut().zip(hu) {
                    *a += c * b;
                }
            }
        }
    }
    z
}

fn aggregate_transpose(dz: &DenseMatrix, op: &GraphOperator, batch: usize) -> DenseMatrix {
    let n = op.n();
    let d = dz.cols();
    let mut dh = DenseMatrix::zeros(dz.rows(), d);
    for s in 0..batch {
        for v in 0..n {
            let g = dz.row(s * n + v);
            for slot in op.slots(v) {
                let c = op.coeff(slot);
                let row = dh.row_mut(s * n + op.node(slot));
                for (a, b) in row.iter_mut().zip(g) {
                    *a += c * b;
                }
            }
        }
    }
    dh
}

/// Single-head graph attention with leaky-ReLU scores and ReLU output.
#[derive(Debug, Clone, PartialEq)]
pub struct GatLayer {
    pub w: DenseMatrix,
    /// `[a_target ‖ a_neighbor]`, length `2 · d_out`.
    pub a: Vec<f64>,
    pub leaky_slope: f64,
}

pub struct GatCache {
    x: DenseMatrix,
    h: DenseMatrix,
    z: DenseMatrix,
    /// per batch sample, per edge slot
    alpha: Vec<f64>,
    score: Vec<f64>,
}

impl GatCache {
    /// Attention coefficients of sample `s`, indexed by operator slot.
    pub fn attention(&self, s: usize, slots: usize) -> &[f64] {
        &self.alpha[s * slots..(s + 1) * slots]
    }
}

impl GatLayer {
    pub fn init(d_in: usize, d_out: usize, leaky_slope: f64, rng: &mut impl Rng) -> Self {
        let w = glorot(d_in, d_out, d_in + d_out, rng);
        let a = glorot(2 * d_out, 1, 2 * d_out + 1, rng).into_vec();
        GatLayer { w, a, leaky_slope }
    }

    pub fn zeros_like(&self) -> Self {
        GatLayer { w: DenseMatrix::zeros(self.w.rows(), self.w.cols()), a: vec![0.0; self.a.len()], leaky_slope: self.leaky_slope }
    }

    pub fn d_out(&self) -> usize {
        self.w.cols()
    }

    pub fn forward(&self, x: &DenseMatrix, op: &GraphOperator) -> Result<(DenseMatrix, GatCache)> {
        check_cols(x, self.w.rows(), "GAT layer")?;
        let batch = check_rows(x, op.n())?;
        let n = op.n();
        let d = self.d_out();
        let (a_dst, a_src) = self.a.split_at(d);
        let h = x.matmul(&self.w)?;
        let slots = op.n_slots();
        let mut alpha = vec![0.0; batch * slots];
        let mut score = vec![0.0; batch * slots];
        let mut z = DenseMatrix::zeros(h.rows(), d);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        for s in 0..batch {
            let target: Vec<f64> = (0..n).map(|v| dot(a_dst, h.row(s * n + v))).collect();
            let neighbor: Vec<f64> = (0..n).map(|u| dot(a_src, h.row(s * n + u))).collect();
            for v in 0..n {
                let range = op.slots(v);
                let mut max = f64::NEG_INFINITY;
                for slot in range.clone() {
                    let pre = target[v] + neighbor[op.node(slot)];
                    score[s * slots + slot] = pre;
                    let e = if pre > 0.0 { pre } else { self.leaky_slope * pre };
                    alpha[s * slots + slot] = e;
                    max = max.max(e);
                }
                let mut total = 0.0;
                for slot in range.clone() {
                    let w = (alpha[s * slots + slot] - max).exp();
                    alpha[s * slots + slot] = w;
                    total += w;
                }
                let zv = z.row_mut(s * n + v);
                for slot in range {
                    let w = alpha[s * slots + slot] / total;
                    alpha[s * slots + slot] = w;
                    for (a, b) in zv.iter_mut().zip(h.row(s * n + op.node(slot))) {
                        *a += w * b;
                    }
                }
            }
        }
        let mut out = z.clone();
        relu_in_place(&mut out);
        Ok((out, GatCache { x: x.clone(), h, z, alpha, score }))
    }

    pub fn backward(&self, d_out: &DenseMatrix, cache: &GatCache, op: &GraphOperator, grad: &mut GatLayer) -> DenseMatrix {
        let n = op.n();
        let d = self.d_out();
        let batch = cache.x.rows() / n;
        let slots = op.n_slots();
        let (a_dst, a_src) = self.a.split_at(d);
        let mut dz = d_out.clone();
        for (g, &z) in dz.as_mut_slice().iter_mut().zip(cache.z.as_slice()) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        let mut dh = DenseMatrix::zeros(cache.h.rows(), d);
        let mut d_target = vec![0.0; n];
        let mut d_neighbor = vec![0.0; n];
        let mut d_alpha = Vec::new();
        for s in 0..batch {
            d_target.iter_mut().for_each(|x| *x = 0.0);
            d_neighbor.iter_mut().for_each(|x| *x = 0.0);
            for v in 0..n {
                let range = op.slots(v);
                let dzv = dz.row(s * n + v);
                d_alpha.clear();
                let mut weighted = 0.0;
                for slot in range.clone() {
                    let u = op.node(slot);
                    let al = cache.alpha[s * slots + slot];
                    let hu = cache.h.row(s * n + u);
                    let da: f64 = dzv.iter().zip(hu).map(|(g, h)| g * h).sum();
                    d_alpha.push(da);
                    weighted += al * da;
                    let dhu = dh.row_mut(s * n + u);
                    for (x, g) in dhu.iter_mut().zip(dzv) {
                        *x += al * g;
                    }
                }
                for (i, slot) in range.enumerate() {
                    let al = cache.alpha[s * slots + slot];
                    let de = al * (d_alpha[i] - weighted);
                    let pre = cache.score[s * slots + slot];
                    let dpre = if pre > 0.0 { de } else { self.leaky_slope * de };
                    d_target[v] += dpre;
                    d_neighbor[op.node(slot)] += dpre;
                }
            }
            let (ga_dst, ga_src) = grad.a.split_at_mut(d);
            for v in 0..n {
                let hv = cache.h.row(s * n + v);
                for k in 0..d {
                    ga_dst[k] += d_target[v] * hv[k];
                    ga_src[k] += d_neighbor[v] * hv[k];
                }
                let dhv = dh.row_mut(s * n + v);
                for k in 0..d {
                    dhv[k] += d_target[v] * a_dst[k] + d_neighbor[v] * a_src[k];
                }
            }
        }
        gemm(1.0, &cache.x, true, &dh, false, 1.0, &mut grad.w);
        let mut dx = DenseMatrix::zeros(cache.x.rows(), cache.x.cols());
        gemm(1.0, &dh, false, &self.w, true, 0.0, &mut dx);
        dx
    }
}

/// Affine map `X W + b` with the bias broadcast over rows. Serves as the GNN
/// output head and as the MLP's dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub w: DenseMatrix,
    pub b: Vec<f64>,
}

impl Affine {
    pub fn init(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        Affine { w: glorot(d_in, d_out, d_in + d_out, rng), b: vec![0.0; d_out] }
    }

    pub fn zeros_like(&self) -> Self {
        Affine { w: DenseMatrix::zeros(self.w.rows(), self.w.cols()), b: vec![0.0; self.b.len()] }
    }

    pub fn forward(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        check_cols(x, self.w.rows(), "affine layer")?;
        let mut y = DenseMatrix::zeros(x.rows(), self.w.cols());
        for r in 0..y.rows() {
            y.row_mut(r).copy_from_slice(&self.b);
        }
        gemm(1.0, x, false, &self.w, false, 1.0, &mut y);
        Ok(y)
    }

    pub fn backward(&self, d_y: &DenseMatrix, x: &DenseMatrix, grad: &mut Affine) -> DenseMatrix {
        gemm(1.0, x, true, d_y, false, 1.0, &mut grad.w);
        for r in 0..d_y.rows() {
            for (g, v) in grad.b.iter_mut().zip(d_y.row(r)) {
                *g += v;
            }
        }
        let mut dx = DenseMatrix::zeros(x.rows(), x.cols());
        gemm(1.0, d_y, false, &self.w, true, 0.0, &mut dx);
        dx
    }
}

/// Linear output head of the graph network: two outputs per node.
pub type LinearHead = Affine;
