use std::collections::BTreeSet;

use crate::grid::{AdjacencyMatrix, NetworkCase};
use crate::{Error, Result};

/// Buses hosting a PMU, as sorted case row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PmuPlacement {
    buses: Vec<usize>,
}

impl PmuPlacement {
    pub fn new(buses: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = buses.into_iter().collect();
        PmuPlacement { buses: set.into_iter().collect() }
    }

    /// PMU on every bus.
    pub fn everywhere(n: usize) -> Self {
        PmuPlacement { buses: (0..n).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.buses
    }

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn contains(&self, bus: usize) -> bool {
        self.buses.binary_search(&bus).is_ok()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &b in &self.buses {
            m[b] = true;
        }
        m
    }

    pub fn from_ids(case: &NetworkCase, ids: &[usize]) -> Result<Self> {
        let idx = ids
            .iter()
            .map(|&id| case.bus_index(id).ok_or_else(|| Error::Config(format!("placement names unknown bus {id}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(PmuPlacement::new(idx))
    }

    pub fn to_ids(&self, case: &NetworkCase) -> Vec<usize> {
        self.buses.iter().map(|&i| case.buses()[i].id).collect()
    }

    /// Placement file: a JSON array of bus ids.
    pub fn to_json(&self, case: &NetworkCase) -> String {
        serde_json::to_string(&self.to_ids(case)).expect("ids serialize")
    }

    pub fn from_json(case: &NetworkCase, text: &str) -> Result<Self> {
        let ids: Vec<usize> = serde_json::from_str(text)?;
        PmuPlacement::from_ids(case, &ids)
    }

    /// First bus neither hosting a PMU nor adjacent to one.
    pub fn first_uncovered(&self, adj: &AdjacencyMatrix) -> Option<usize> {
        let mask = self.mask(adj.n());
        (0..adj.n()).find(|&v| !mask[v] && !adj.neighbors(v).any(|u| mask[u]))
    }
}

/// Every bus hosts a PMU or neighbors one.
pub fn dominates(placement: &PmuPlacement, adj: &AdjacencyMatrix) -> bool {
    placement.first_uncovered(adj).is_none()
}

/// Greedy dominating set: repeatedly take the bus whose closed neighborhood
/// covers the most uncovered buses, lowest index first on ties.
pub fn place_pmus(adj: &AdjacencyMatrix) -> PmuPlacement {
    extend_placement(&PmuPlacement::new([]), adj)
}

/// Greedily add PMUs to an existing placement until it dominates `adj`.
pub fn extend_placement(initial: &PmuPlacement, adj: &AdjacencyMatrix) -> PmuPlacement {
    let n = adj.n();
    let mut covered = vec![false; n];
    for &v in initial.indices() {
        covered[v] = true;
        adj.neighbors(v).for_each(|u| covered[u] = true);
    }
    let mut remaining = covered.iter().filter(|c| !**c).count();
    let mut chosen = initial.indices().to_vec();
    while remaining > 0 {
        let gain = |v: usize| usize::from(!covered[v]) + adj.neighbors(v).filter(|&u| !covered[u]).count();
        let best = (0..n).max_by(|&a, &b| gain(a).cmp(&gain(b)).then(b.cmp(&a))).expect("non-empty graph");
        chosen.push(best);
        for u in std::iter::once(best).chain(adj.neighbors(best)) {
            if !covered[u] {
                covered[u] = true;
                remaining -= 1;
            }
        }
    }
    let placement = PmuPlacement::new(chosen);
    debug_assert!(dominates(&placement, adj));
    placement
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_takes_hub() {
        let adj = AdjacencyMatrix::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(place_pmus(&adj).indices(), &[0]);
        let adj = AdjacencyMatrix::from_edges(5, &[(3, 0), (3, 1), (3, 2), (3, 4)]);
        assert_eq!(place_pmus(&adj).indices(), &[3]);
    }

    #[test]
    fn path_takes_middle() {
        let adj = AdjacencyMatrix::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(place_pmus(&adj).indices(), &[1]);
    }

    #[test]
    fn ties_break_on_lower_index() {
        // two disjoint edges: both endpoints tie, pick the lower of each
        let adj = AdjacencyMatrix::from_edges(4, &[(0, 1), (2, 3)]);
        assert_eq!(place_pmus(&adj).indices(), &[0, 2]);
    }

    #[test]
    fn detects_uncovered_bus() {
        let adj = AdjacencyMatrix::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let p = PmuPlacement::new([0]);
        assert_eq!(p.first_uncovered(&adj), Some(2));
        assert!(!dominates(&p, &adj));
        assert!(dominates(&PmuPlacement::new([1, 2]), &adj));
    }

    #[test]
    fn extension_keeps_existing_pmus() {
        let adj = AdjacencyMatrix::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        let p = extend_placement(&PmuPlacement::new([0]), &adj);
        assert!(p.contains(0) && dominates(&p, &adj));
        assert_eq!(extend_placement(&p, &adj), p);
    }
}
