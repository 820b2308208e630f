use rand::Rng as _;

use super::*;
use crate::grid::AdjacencyMatrix;
use crate::rng;

fn random_graph(n: usize, p: f64, seed: u64) -> AdjacencyMatrix {
    let mut r = rng::stream(seed, 7);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    AdjacencyMatrix::from_edges(n, &edges)
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut r = rng::stream(seed, 11);
    DenseMatrix::from_fn(rows, cols, |_, _| r.gen_range(-1.0..1.0))
}

fn closed(adj: &AdjacencyMatrix, v: usize) -> Vec<usize> {
    (0..adj.n()).filter(|&u| u == v || adj.get(v, u)).collect()
}

fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum())
}

fn gcn_oracle(x: &DenseMatrix, w: &DenseMatrix, adj: &AdjacencyMatrix, inclusive: bool) -> DenseMatrix {
    let n = adj.n();
    let h = naive_matmul(x, w);
    let size = |v: usize| if inclusive { adj.degree(v) as f64 + 1.0 } else { adj.degree(v).max(1) as f64 };
    DenseMatrix::from_fn(x.rows(), w.cols(), |r, j| {
        let (s, v) = (r / n, r % n);
        let z: f64 = closed(adj, v).iter().map(|&u| h.get(s * n + u, j) / (size(v) * size(u)).sqrt()).sum();
        z.max(0.0)
    })
}

fn gat_oracle(x: &DenseMatrix, layer: &GatLayer, adj: &AdjacencyMatrix) -> (DenseMatrix, Vec<Vec<f64>>) {
    let n = adj.n();
    let d = layer.w.cols();
    let h = naive_matmul(x, &layer.w);
    let mut out = DenseMatrix::zeros(x.rows(), d);
    let mut alphas = Vec::new();
    for r in 0..x.rows() {
        let (s, v) = (r / n, r % n);
        let nb = closed(adj, v);
        let e: Vec<f64> = nb
            .iter()
            .map(|&u| {
                let pre: f64 = (0..d).map(|j| layer.a[j] * h.get(r, j) + layer.a[d + j] * h.get(s * n + u, j)).sum();
                if pre > 0.0 {
                    pre
                } else {
                    layer.leaky_slope * pre
                }
            })
            .collect();
        let total: f64 = e.iter().map(|v| v.exp()).sum();
        let alpha: Vec<f64> = e.iter().map(|v| v.exp() / total).collect();
        for j in 0..d {
            let z: f64 = nb.iter().zip(&alpha).map(|(&u, a)| a * h.get(s * n + u, j)).sum();
            out.set(r, j, z.max(0.0));
        }
        alphas.push(alpha);
    }
    (out, alphas)
}

#[test]
fn gcn_matches_loop_oracle() {
    let adj = random_graph(9, 0.3, 1);
    let x = random_matrix(3 * 9, 4, 2);
    let mut r = rng::stream(3, 0);
    let layer = GcnLayer::init(4, 6, &mut r);
    for (norm, inclusive) in [(NeighborhoodNorm::SelfInclusive, true), (NeighborhoodNorm::SelfExclusive, false)] {
        let op = GraphOperator::new(&adj, norm);
        let (out, _) = layer.forward(&x, &op).unwrap();
        assert!(out.max_abs_diff(&gcn_oracle(&x, &layer.w, &adj, inclusive)) < 1e-12);
    }
}

#[test]
fn gat_matches_loop_oracle_and_attention_is_a_distribution() {
    let adj = random_graph(8, 0.35, 4);
    let x = random_matrix(2 * 8, 3, 5);
    let mut r = rng::stream(6, 0);
    let layer = GatLayer::init(3, 5, 0.2, &mut r);
    let op = GraphOperator::new(&adj, NeighborhoodNorm::SelfInclusive);
    let (out, cache) = layer.forward(&x, &op).unwrap();
    let (expected, alphas) = gat_oracle(&x, &layer, &adj);
    assert!(out.max_abs_diff(&expected) < 1e-12);
    for s in 0..2 {
        let att = cache.attention(s, op.n_slots());
        for v in 0..8 {
            let got: Vec<f64> = op.slots(v).map(|k| att[k]).collect();
            let sum: f64 = got.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            for (a, b) in got.iter().zip(&alphas[s * 8 + v]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn path_graph_middle_node() {
    let adj = AdjacencyMatrix::from_edges(3, &[(0, 1), (1, 2)]);
    let op = GraphOperator::new(&adj, NeighborhoodNorm::SelfInclusive);
    let layer = GcnLayer { w: DenseMatrix::identity(1) };
    let x = DenseMatrix::from_vec(3, 1, vec![1.0; 3]).unwrap();
    let (out, _) = layer.forward(&x, &op).unwrap();
    let expected = 1.0 / 3.0 + 2.0 / 6f64.sqrt();
    assert!((out.get(1, 0) - expected).abs() < 1e-15);
    assert!((expected - 1.14983).abs() < 1e-5);
}

#[test]
fn isolated_node_keeps_its_features_through_relu() {
    let adj = AdjacencyMatrix::empty(1);
    let op = GraphOperator::new(&adj, NeighborhoodNorm::SelfInclusive);
    let layer = GcnLayer { w: DenseMatrix::identity(2) };
    let x = DenseMatrix::from_vec(1, 2, vec![3.0, -2.0]).unwrap();
    let (out, _) = layer.forward(&x, &op).unwrap();
    assert_eq!(out.as_slice(), &[3.0, 0.0]);
}

#[test]
fn zero_attention_vector_averages_neighbors() {
    let adj = random_graph(7, 0.4, 8);
    let op = GraphOperator::new(&adj, NeighborhoodNorm::SelfInclusive);
    let mut r = rng::stream(9, 0);
    let mut layer = GatLayer::init(2, 3, 0.2, &mut r);
    layer.a.iter_mut().for_each(|a| *a = 0.0);
    let x = random_matrix(7, 2, 10);
    let (_, cache) = layer.forward(&x, &op).unwrap();
    let att = cache.attention(0, op.n_slots());
    for v in 0..7 {
        let k = (adj.degree(v) + 1) as f64;
        for slot in op.slots(v) {
            assert!((att[slot] - 1.0 / k).abs() < 1e-15);
        }
    }
}

#[test]
fn head_is_affine_per_node() {
    let head = Affine {
        w: DenseMatrix::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 2.0, -1.0]).unwrap(),
        b: vec![0.5, -0.5],
    };
    let x = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0]).unwrap();
    let y = head.forward(&x).unwrap();
    assert_eq!(y.as_slice(), &[7.5, -1.5, 0.5, -0.5]);
    assert!(head.forward(&DenseMatrix::zeros(1, 2)).is_err());
}

fn small_gnn(seed: u64) -> GnnModel {
    let cfg = GnnConfig { hidden: 5, gcn_layers: 2, gat_layers: 1, ..Default::default() };
    GnnModel::new(cfg, &mut rng::stream(seed, 0)).unwrap()
}

fn check_gradients<M: Estimator>(model: &M, ctx: &M::Context, x: &DenseMatrix, y: &DenseMatrix) {
    let mut grad = model.zeros_like();
    model.loss_and_grad(ctx, x, y, &[1.0], &mut grad).unwrap();
    let analytic: Vec<Vec<f64>> = grad.params().iter().map(|p| p.to_vec()).collect();
    let loss_at = |m: &M| {
        let pred = m.forward_batch(ctx, x).unwrap();
        loss_mse(&pred, y).unwrap().0
    };
    let h = 1e-5;
    let mut checked = 0;
    for (b, block) in analytic.iter().enumerate() {
        for (i, &g) in block.iter().enumerate() {
            let mut plus = model.zeros_like();
            copy_params(model, &mut plus);
            plus.params_mut()[b][i] += h;
            let mut minus = model.zeros_like();
            copy_params(model, &mut minus);
            minus.params_mut()[b][i] -= h;
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            // below 1e-3 the central difference is dominated by rounding
            let scale = g.abs().max(numeric.abs()).max(1e-3);
            let rel = (g - numeric).abs() / scale;
            assert!(rel < 1e-5, "block {b} entry {i}: analytic {g} numeric {numeric}");
            checked += 1;
        }
    }
    assert!(checked > 20);
}

fn copy_params<M: Estimator>(from: &M, to: &mut M) {
    for (dst, src) in to.params_mut().into_iter().zip(from.params()) {
        dst.copy_from_slice(src);
    }
}

#[test]
fn gnn_gradients_match_finite_differences() {
    let adj = random_graph(6, 0.4, 12);
    let model = small_gnn(13);
    let op = model.operator(&adj);
    let x = random_matrix(3, 12, 14);
    let y = random_matrix(3, 12, 15);
    check_gradients(&model, &op, &x, &y);
}

#[test]
fn mlp_gradients_match_finite_differences() {
    let model = MlpModel::new(MlpConfig { hidden: vec![7, 6] }, 8, &mut rng::stream(16, 0)).unwrap();
    let x = random_matrix(4, 8, 17);
    let y = random_matrix(4, 8, 18);
    check_gradients(&model, &(), &x, &y);
}

#[test]
fn gnn_is_permutation_equivariant() {
    let n = 10;
    let adj = random_graph(n, 0.3, 19);
    let model = small_gnn(20);
    let x = random_matrix(n, 2, 21);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.reverse();
    perm.swap(2, 7);
    let mut px = DenseMatrix::zeros(n, 2);
    for v in 0..n {
        px.row_mut(perm[v]).copy_from_slice(x.row(v));
    }
    let y = model.forward(&x, &model.operator(&adj)).unwrap();
    let py = model.forward(&px, &model.operator(&adj.permuted(&perm))).unwrap();
    for v in 0..n {
        for j in 0..2 {
            assert!((py.get(perm[v], j) - y.get(v, j)).abs() < 1e-10);
        }
    }
}

#[test]
fn training_loss_decreases_on_linear_toy_data() {
    let n = 4;
    let adj = AdjacencyMatrix::from_edges(n, &[(0, 1), (1, 2), (2, 3)]);
    let mut r = rng::stream(22, 0);
    let samples = 64;
    let features: Vec<f64> = (0..samples * 2 * n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let labels: Vec<f64> = features.chunks(2).flat_map(|p| [0.5 * p[0] - 0.2 * p[1], 0.3 * p[0] + p[1]]).collect();
    let mut model = small_gnn(23);
    let op = model.operator(&adj);
    let cfg = TrainConfig { epochs: 10, batch_size: samples, seed: 1, ..Default::default() };
    let train = Samples { features: &features, labels: &labels, width: 2 * n };
    let report = train_samples(&mut model, &op, train, Some(train), &cfg, |_, _| {}).unwrap();
    for w in report.train_loss.windows(2) {
        assert!(w[1] <= w[0], "{:?}", report.train_loss);
    }
    assert_eq!(report.val_loss.len(), 10);
}

#[test]
fn training_is_deterministic() {
    let n = 3;
    let adj = AdjacencyMatrix::from_edges(n, &[(0, 1), (1, 2)]);
    let mut r = rng::stream(24, 0);
    let features: Vec<f64> = (0..40 * 2 * n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let labels: Vec<f64> = features.iter().map(|v| v * 0.7).collect();
    let run = || {
        let mut model = small_gnn(25);
        let op = model.operator(&adj);
        let cfg = TrainConfig { epochs: 3, batch_size: 8, seed: 2, ..Default::default() };
        train_samples(&mut model, &op, Samples { features: &features, labels: &labels, width: 2 * n }, None, &cfg, |_, _| {})
            .unwrap();
        model
    };
    assert_eq!(run(), run());
}

#[test]
fn divergence_is_reported() {
    let n = 2;
    let adj = AdjacencyMatrix::from_edges(n, &[(0, 1)]);
    let features = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
    let labels = vec![f64::NAN; 8];
    let mut model = small_gnn(26);
    let op = model.operator(&adj);
    let err = train_samples(&mut model, &op, Samples { features: &features, labels: &labels, width: 4 }, None, &TrainConfig::default(), |_, _| {});
    assert!(matches!(err, Err(crate::Error::Divergence { epoch: 0, .. })));
}

#[test]
fn model_file_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let adj = AdjacencyMatrix::from_edges(3, &[(0, 1), (1, 2)]);
    let mut r = rng::stream(27, 0);
    let features: Vec<f64> = (0..20 * 6).map(|_| r.gen_range(-1.0..1.0)).collect();
    let labels: Vec<f64> = features.iter().map(|v| v.sin()).collect();
    let mut gnn = small_gnn(28);
    let op = gnn.operator(&adj);
    let cfg = TrainConfig { epochs: 2, batch_size: 5, ..Default::default() };
    train_samples(&mut gnn, &op, Samples { features: &features, labels: &labels, width: 6 }, None, &cfg, |_, _| {}).unwrap();
    let path = dir.path().join("model.bin");
    write_model(&path, &Model::Gnn(gnn.clone()), serde_json::json!({"seed": 28})).unwrap();
    let (loaded, header) = read_model(&path).unwrap();
    assert_eq!(loaded, Model::Gnn(gnn.clone()));
    assert_eq!(header.nodes, 3);
    let Model::Gnn(loaded) = loaded else { unreachable!() };
    assert_eq!(loaded.predict(&op, &features).unwrap(), gnn.predict(&op, &features).unwrap());

    let mut mlp = MlpModel::new(MlpConfig { hidden: vec![4] }, 6, &mut r).unwrap();
    train_samples(&mut mlp, &(), Samples { features: &features, labels: &labels, width: 6 }, None, &cfg, |_, _| {}).unwrap();
    write_model(&path, &Model::Mlp(mlp.clone()), serde_json::Value::Null).unwrap();
    assert_eq!(read_model(&path).unwrap().0, Model::Mlp(mlp));

    std::fs::write(&path, b"not a model").unwrap();
    assert!(matches!(read_model(&path), Err(crate::Error::Format(_))));
}
