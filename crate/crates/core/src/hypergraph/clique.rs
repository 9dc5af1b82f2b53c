//! Clique expansion: the simple graph connecting every pair of nodes
//! that co-occur in some hyperedge.

use std::collections::BTreeSet;

use super::Hypergraph;

/// Sparse symmetric adjacency with two views: per-node sorted neighbor
/// lists for O(log n) adjacency checks, and the sorted pair list (u < v)
/// for uniform edge selection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliqueGraph {
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

pub fn clique_adjacency(h: &Hypergraph) -> CliqueGraph {
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for e in h.hyperedges() {
        let nodes = e.nodes();
        for (i, &u) in nodes.iter().enumerate() {
            for &v in &nodes[i + 1..] {
                pairs.insert((u, v));
            }
        }
    }
    let mut neighbors = vec![Vec::new(); h.num_nodes()];
    for &(u, v) in &pairs {
        neighbors[u].push(v);
        neighbors[v].push(u);
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    CliqueGraph {
        neighbors,
        edges: pairs.into_iter().collect(),
    }
}

impl CliqueGraph {
    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    /// Distinct unordered adjacent pairs.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn are_adjacent(&self, u: usize, v: usize) -> bool {
        u != v && self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    /// All edges as (u, v) with u < v, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::NodeSet;

    fn graph(num_nodes: usize, edges: &[&[usize]]) -> Hypergraph {
        let sets = edges
            .iter()
            .map(|e| NodeSet::new(e.to_vec()).unwrap())
            .collect();
        Hypergraph::new(num_nodes, sets).unwrap()
    }

    #[test]
    fn two_edges_share_middle_node() {
        let c = clique_adjacency(&graph(3, &[&[0, 1], &[1, 2]]));
        assert!(c.are_adjacent(0, 1));
        assert!(c.are_adjacent(1, 2));
        assert!(!c.are_adjacent(0, 2));
        assert_eq!(c.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn single_hyperedge_is_a_clique() {
        let c = clique_adjacency(&graph(3, &[&[0, 1, 2]]));
        assert_eq!(c.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn empty_edge_list_all_false() {
        let c = clique_adjacency(&Hypergraph::new(4, vec![]).unwrap());
        assert_eq!(c.num_edges(), 0);
        for u in 0..4 {
            for v in 0..4 {
                assert!(!c.are_adjacent(u, v));
            }
        }
    }

    #[test]
    fn symmetric_no_self_loops() {
        let c = clique_adjacency(&graph(5, &[&[0, 1, 2], &[2, 3], &[3, 4, 0]]));
        for u in 0..5 {
            assert!(!c.are_adjacent(u, u));
            for v in 0..5 {
                assert_eq!(c.are_adjacent(u, v), c.are_adjacent(v, u));
            }
        }
    }

    #[test]
    fn overlapping_edges_do_not_duplicate_pairs() {
        let c = clique_adjacency(&graph(3, &[&[0, 1], &[0, 1, 2]]));
        assert_eq!(c.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(c.neighbors(0), &[1, 2]);
    }
}
