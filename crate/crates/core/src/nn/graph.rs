use serde::{Deserialize, Serialize};

use crate::grid::AdjacencyMatrix;

/// How the neighborhood size in the GCN weight `1/√(|N(v)|·|N(u)|)` is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodNorm {
    /// `|N(v)| = degree + 1`
    SelfInclusive,
    /// `|N(v)| = degree` (isolated nodes count as 1)
    SelfExclusive,
}

/// Closed neighborhoods `N(v) ∪ {v}` in CSR form with the GCN coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOperator {
    n: usize,
    offsets: Vec<usize>,
    nodes: Vec<usize>,
    coeffs: Vec<f64>,
}

impl GraphOperator {
    pub fn new(adj: &AdjacencyMatrix, norm: NeighborhoodNorm) -> Self {
        let n = adj.n();
        let size: Vec<f64> = (0..n)
            .map(|v| {
                let d = adj.degree(v);
                match norm {
                    NeighborhoodNorm::SelfInclusive => (d + 1) as f64,
                    NeighborhoodNorm::SelfExclusive => d.max(1) as f64,
                }
            })
            .collect();
        let mut offsets = vec![0];
        let mut nodes = Vec::new();
        let mut coeffs = Vec::new();
        for v in 0..n {
            for u in 0..n {
                if u == v || adj.get(v, u) {
                    nodes.push(u);
                    coeffs.push(1.0 / (size[v] * size[u]).sqrt());
                }
            }
            offsets.push(nodes.len());
        }
        GraphOperator { n, offsets, nodes, coeffs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Range of edge slots belonging to node `v`.
    pub fn slots(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    pub fn node(&self, slot: usize) -> usize {
        self.nodes[slot]
    }

    pub fn coeff(&self, slot: usize) -> f64 {
        self.coeffs[slot]
    }

    pub fn n_slots(&self) -> usize {
        self.nodes.len()
    }
}
