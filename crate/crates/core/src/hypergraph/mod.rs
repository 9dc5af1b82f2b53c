//! Hypergraph storage, dataset splits, structure masking, clique
//! expansion, and hyperedge size statistics.
//!
//! Node ids are dense 0-based integers. A [`NodeSet`] is the canonical
//! sorted form of a hyperedge or candidate, so set equality is plain
//! list equality and sets order lexicographically.

mod clique;
mod io;
mod split;

pub use clique::{clique_adjacency, CliqueGraph};
pub use io::{
    load_features, load_hypergraph, load_labeled_hypergraph, parse_features, parse_hypergraph,
    parse_labeled_hypergraph, serialize_features, serialize_hypergraph,
};
pub use split::{split_hyperedges, structure_hypergraph};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{Matrix, SparseMatrix};

#[derive(Debug, Error)]
pub enum HypergraphError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("hyperedge {index} has {size} nodes after deduplication; need at least 2")]
    EdgeTooSmall { index: usize, size: usize },
    #[error("node {node} out of range for {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("a node set must contain at least one node")]
    EmptyNodeSet,
    #[error("need at least {needed} hyperedges to split, got {got}")]
    TooFewEdges { needed: usize, got: usize },
    #[error("size distribution requires at least one hyperedge")]
    EmptySizeDistribution,
    #[error("feature matrix: {0}")]
    BadFeatures(String),
}

/// Canonical sorted set of node ids: a hyperedge, a candidate, or a
/// sampled negative example.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct NodeSet {
    nodes: Vec<usize>,
}

impl NodeSet {
    /// Sorts and deduplicates; errors only when nothing remains.
    pub fn new(mut nodes: Vec<usize>) -> Result<Self, HypergraphError> {
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(HypergraphError::EmptyNodeSet);
        }
        Ok(Self { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().copied()
    }

    pub fn max_node(&self) -> usize {
        *self.nodes.last().expect("node sets are nonempty")
    }
}

impl TryFrom<Vec<usize>> for NodeSet {
    type Error = HypergraphError;
    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        NodeSet::new(v)
    }
}

impl From<NodeSet> for Vec<usize> {
    fn from(s: NodeSet) -> Self {
        s.nodes
    }
}

/// An undirected hypergraph with both incidence views: nodes of each
/// hyperedge (the [`NodeSet`] list) and hyperedges of each node.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypergraph {
    num_nodes: usize,
    hyperedges: Vec<NodeSet>,
    edges_of_node: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(num_nodes: usize, hyperedges: Vec<NodeSet>) -> Result<Self, HypergraphError> {
        let mut edges_of_node = vec![Vec::new(); num_nodes];
        for (j, e) in hyperedges.iter().enumerate() {
            if e.len() < 2 {
                return Err(HypergraphError::EdgeTooSmall { index: j, size: e.len() });
            }
            if e.max_node() >= num_nodes {
                return Err(HypergraphError::NodeOutOfRange {
                    node: e.max_node(),
                    num_nodes,
                });
            }
            for v in e.iter() {
                edges_of_node[v].push(j);
            }
        }
        Ok(Self {
            num_nodes,
            hyperedges,
            edges_of_node,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn hyperedges(&self) -> &[NodeSet] {
        &self.hyperedges
    }

    pub fn edge(&self, j: usize) -> &NodeSet {
        &self.hyperedges[j]
    }

    /// Hyperedge ids containing the node, ascending.
    pub fn edges_of_node(&self, i: usize) -> &[usize] {
        &self.edges_of_node[i]
    }

    pub fn node_degree(&self, i: usize) -> usize {
        self.edges_of_node[i].len()
    }

    /// Binary incidence matrix, nodes × hyperedges.
    pub fn incidence(&self) -> SparseMatrix {
        let mut triplets = Vec::new();
        for (j, e) in self.hyperedges.iter().enumerate() {
            for v in e.iter() {
                triplets.push((v, j, 1.0));
            }
        }
        SparseMatrix::from_triplets(self.num_nodes, self.hyperedges.len(), &triplets)
    }
}

/// Dense per-node feature rows.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    data: Matrix,
}

impl FeatureMatrix {
    pub fn new(data: Matrix) -> Result<Self, HypergraphError> {
        if !data.all_finite() {
            return Err(HypergraphError::BadFeatures(
                "non-finite entry".to_string(),
            ));
        }
        Ok(Self { data })
    }

    pub fn num_nodes(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }
}

/// A 60/20/20 split of the hyperedge list plus the train-structure
/// mask. Index vectors point back into the source hyperedge list so a
/// split can be persisted and replayed exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitBundle {
    pub train: Vec<NodeSet>,
    pub validation: Vec<NodeSet>,
    pub test: Vec<NodeSet>,
    /// Parallel to `train`; false marks the hyperedges hidden from the
    /// encoder's structure (they stay positive training examples).
    pub structure_visible: Vec<bool>,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl SplitBundle {
    pub fn masked_count(&self) -> usize {
        self.structure_visible.iter().filter(|&&v| !v).count()
    }
}

/// Empirical hyperedge size histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeDistribution {
    histogram: BTreeMap<usize, f64>,
    total: usize,
}

impl SizeDistribution {
    pub fn from_edges(edges: &[NodeSet]) -> Result<Self, HypergraphError> {
        if edges.is_empty() {
            return Err(HypergraphError::EmptySizeDistribution);
        }
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for e in edges {
            *counts.entry(e.len()).or_insert(0) += 1;
        }
        let total = edges.len();
        let histogram = counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / total as f64))
            .collect();
        Ok(Self { histogram, total })
    }

    pub fn probability(&self, size: usize) -> f64 {
        self.histogram.get(&size).copied().unwrap_or(0.0)
    }

    /// (size, probability) pairs in ascending size order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.histogram.iter().map(|(&k, &p)| (k, p))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.histogram.keys().copied()
    }

    pub fn mean(&self) -> f64 {
        self.histogram.iter().map(|(&k, &p)| k as f64 * p).sum()
    }

    pub fn sample_count(&self) -> usize {
        self.total
    }
}
