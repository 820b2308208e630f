use std::collections::VecDeque;

use super::case::NetworkCase;
use crate::Result;

/// Binary, symmetric, zero-diagonal bus adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<u8>,
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        AdjacencyMatrix { n, entries: vec![0; n * n] }
    }

    /// Adjacency from an undirected edge list over nodes `0..n`. Self loops are ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = AdjacencyMatrix::empty(n);
        for &(i, j) in edges {
            adj.connect(i, j);
        }
        adj
    }

    pub(crate) fn connect(&mut self, i: usize, j: usize) {
        if i != j {
            self.entries[i * self.n + j] = 1;
            self.entries[j * self.n + i] = 1;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j] != 0
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&a| a != 0).count()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Neighbors of `i` in increasing index order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().filter(|(_, &a)| a != 0).map(|(j, _)| j)
    }

    /// Relabel nodes: node `i` of `self` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> AdjacencyMatrix {
        let mut out = AdjacencyMatrix::empty(self.n);
        for i in 0..self.n {
            for j in self.neighbors(i) {
                out.connect(perm[i], perm[j]);
            }
        }
        out
    }
}

/// Adjacency over in-service branches with an optional extra outage.
/// Parallel branches map to a single entry.
pub fn build_adjacency(case: &NetworkCase, outage: Option<usize>) -> Result<AdjacencyMatrix> {
    case.check_outage(outage)?;
    let mut adj = AdjacencyMatrix::empty(case.n_buses());
    for (k, br) in case.branches().iter().enumerate() {
        if br.in_service && Some(k) != outage {
            let (f, t) = case.branch_ends(k);
            adj.connect(f, t);
        }
    }
    Ok(adj)
}

/// Breadth-first reachability from node 0.
pub fn is_connected(adj: &AdjacencyMatrix) -> bool {
    let n = adj.n();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for j in adj.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == n
}

/// Copy of `case` with branch `k` out of service.
pub fn remove_branch(case: &NetworkCase, k: usize) -> Result<NetworkCase> {
    case.check_outage(Some(k))?;
    Ok(case.with_branch_status(k, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use crate::grid::case::tests::{bus, line};
    use crate::grid::BusKind;
    use proptest::prelude::*;

    fn path3() -> NetworkCase {
        NetworkCase::new(
            "path",
            100.0,
            vec![bus(1, BusKind::Slack), bus(2, BusKind::Pq), bus(3, BusKind::Pq)],
            vec![line(1, 2, 0.0, 0.1), line(2, 3, 0.0, 0.1)],
        )
        .unwrap()
    }

    #[test]
    fn path_graph_adjacency() {
        let adj = build_adjacency(&path3(), None).unwrap();
        let rows: Vec<Vec<u8>> = (0..3).map(|i| adj.row(i).to_vec()).collect();
        assert_eq!(rows, vec![vec![0, 1, 0], vec![1, 0, 1], vec![0, 1, 0]]);
        assert!(is_connected(&adj));
    }

    #[test]
    fn three_nodes_one_edge_is_disconnected() {
        assert!(!is_connected(&AdjacencyMatrix::from_edges(3, &[(1, 2)])));
    }

    #[test]
    fn outage_of_parallel_branch_keeps_edge() {
        let case = NetworkCase::new(
            "par",
            100.0,
            vec![bus(1, BusKind::Slack), bus(2, BusKind::Pq)],
            vec![line(1, 2, 0.0, 0.1), line(1, 2, 0.0, 0.2)],
        )
        .unwrap();
        let adj = build_adjacency(&case, Some(0)).unwrap();
        assert!(adj.get(0, 1));
    }

    #[test]
    fn outage_index_errors() {
        let case = path3();
        assert!(matches!(build_adjacency(&case, Some(5)), Err(Error::BranchIndex { index: 5, count: 2 })));
        let removed = remove_branch(&case, 1).unwrap();
        assert!(case.branches()[1].in_service);
        assert!(!removed.branches()[1].in_service);
        assert!(matches!(remove_branch(&removed, 1), Err(Error::BranchOutOfService(1))));
    }

    #[test]
    fn remove_then_build_equals_outage_argument() {
        let case = path3();
        for k in 0..case.n_branches() {
            let a = build_adjacency(&remove_branch(&case, k).unwrap(), None).unwrap();
            let b = build_adjacency(&case, Some(k)).unwrap();
            assert_eq!(a, b);
        }
    }

    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = x;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }

    fn union_find_connected(n: usize, edges: &[(usize, usize)]) -> bool {
        let mut parent: Vec<usize> = (0..n).collect();
        for &(a, b) in edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        (0..n).all(|i| find(&mut parent, i) == root)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn bfs_agrees_with_union_find(n in 1usize..=20, raw in proptest::collection::vec((0usize..20, 0usize..20), 0..40)) {
            let edges: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let adj = AdjacencyMatrix::from_edges(n, &edges);
            prop_assert_eq!(is_connected(&adj), union_find_connected(n, &edges));
        }

        #[test]
        fn adjacency_is_symmetric_with_zero_diagonal(n in 1usize..=15, raw in proptest::collection::vec((0usize..15, 0usize..15), 0..40)) {
            let edges: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let adj = AdjacencyMatrix::from_edges(n, &edges);
            for i in 0..n {
                prop_assert!(!adj.get(i, i));
                for j in 0..n {
                    prop_assert_eq!(adj.get(i, j), adj.get(j, i));
                }
            }
        }
    }
}
