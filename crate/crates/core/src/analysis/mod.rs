//! Structural comparison of an observed hypergraph against one whose
//! edges are partly replaced by sampled negatives: node degrees, pair
//! overlaps, and hyperedge intersection sizes, each reduced to a
//! Kolmogorov D-statistic.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use thiserror::Error;

use crate::hypergraph::{Hypergraph, HypergraphError, NodeSet, SizeDistribution};
use crate::metrics::{ks_statistic, MetricError};
use crate::model::{generate_logits, sample_noise, select_top_k, Binding, ModelError, ModelProfile};
use crate::rng;
use crate::tensor::{ParamStore, Tape};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("expected {expected} replacement negatives, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The three measured distributions. Degrees cover every node,
/// zero-degree ones included; the pair lists keep only pairs that
/// interact at least once, matching the "on each pair" reading.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureDistributions {
    /// Hyperedges containing each node, one entry per node.
    pub node_degrees: Vec<usize>,
    /// Hyperedges containing both nodes, per unordered node pair with
    /// overlap ≥ 1, in ascending pair order.
    pub pair_overlaps: Vec<usize>,
    /// Shared nodes per unordered hyperedge pair with intersection
    /// ≥ 1, in ascending index-pair order.
    pub intersection_sizes: Vec<usize>,
}

/// D-statistics between two measured hypergraphs, one per measure.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DStats {
    pub node_degree: f64,
    pub pair_overlap: f64,
    pub intersection_size: f64,
}

impl DStats {
    pub fn mean(&self) -> f64 {
        (self.node_degree + self.pair_overlap + self.intersection_size) / 3.0
    }
}

pub fn measure(h: &Hypergraph) -> MeasureDistributions {
    let node_degrees: Vec<usize> = (0..h.num_nodes())
        .map(|v| h.edges_of_node(v).len())
        .collect();

    let mut overlaps: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for e in h.hyperedges() {
        let nodes = e.nodes();
        for (i, &u) in nodes.iter().enumerate() {
            for &v in &nodes[i + 1..] {
                *overlaps.entry((u, v)).or_default() += 1;
            }
        }
    }

    // Edge pairs via the node → edges index; only pairs sharing a node
    // ever surface, so the zero-intersection mass never materializes.
    let mut intersections: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for v in 0..h.num_nodes() {
        let edges = h.edges_of_node(v);
        for (i, &ei) in edges.iter().enumerate() {
            for &ej in &edges[i + 1..] {
                *intersections.entry((ei, ej)).or_default() += 1;
            }
        }
    }

    let degree_total: usize = node_degrees.iter().sum();
    let size_total: usize = h.hyperedges().iter().map(NodeSet::len).sum();
    assert_eq!(degree_total, size_total, "handshake identity violated");

    MeasureDistributions {
        node_degrees,
        pair_overlaps: overlaps.into_values().collect(),
        intersection_sizes: intersections.into_values().collect(),
    }
}

/// A copy of `h` with a uniformly chosen sixth of its hyperedges
/// (⌈|E|/6⌉, the count `negatives` must match) replaced by the given
/// negatives, in ascending replaced-index order.
pub fn sampled_hypergraph(
    h: &Hypergraph,
    negatives: &[NodeSet],
    seed: u64,
) -> Result<Hypergraph, AnalysisError> {
    let expected = h.hyperedges().len().div_ceil(6);
    if negatives.len() != expected {
        return Err(AnalysisError::CountMismatch {
            expected,
            got: negatives.len(),
        });
    }
    let mut rng = rng::stream(seed, "replace-edges");
    let mut chosen: Vec<usize> =
        rand::seq::index::sample(&mut rng, h.hyperedges().len(), expected).into_vec();
    chosen.sort_unstable();

    let mut edges = h.hyperedges().to_vec();
    for (slot, &idx) in chosen.iter().enumerate() {
        edges[idx] = negatives[slot].clone();
    }
    Ok(Hypergraph::new(h.num_nodes(), edges)?)
}

/// Kolmogorov D-statistic per measure; errors if any list is empty on
/// either side.
pub fn compare(
    orig: &MeasureDistributions,
    samp: &MeasureDistributions,
) -> Result<DStats, AnalysisError> {
    let as_f64 = |xs: &[usize]| xs.iter().map(|&x| x as f64).collect::<Vec<f64>>();
    Ok(DStats {
        node_degree: ks_statistic(&as_f64(&orig.node_degrees), &as_f64(&samp.node_degrees))?,
        pair_overlap: ks_statistic(&as_f64(&orig.pair_overlaps), &as_f64(&samp.pair_overlaps))?,
        intersection_size: ks_statistic(
            &as_f64(&orig.intersection_sizes),
            &as_f64(&samp.intersection_sizes),
        )?,
    })
}

/// Draws `n` negative hyperedges from a trained generator: noise in,
/// top-k node selections out, with sizes drawn from the positive size
/// histogram. Deterministic in the seed.
pub fn generate_negative_edges(
    profile: &ModelProfile,
    gen: &ParamStore,
    sizes: &SizeDistribution,
    n: usize,
    seed: u64,
) -> Result<Vec<NodeSet>, AnalysisError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let (support, weights): (Vec<usize>, Vec<f64>) = sizes.entries().unzip();
    let index = WeightedIndex::new(&weights)
        .expect("size distributions always have positive total mass");
    let mut size_rng = rng::stream(seed, "negative-sizes");
    let drawn: Vec<usize> = (0..n).map(|_| support[index.sample(&mut size_rng)]).collect();

    let noise = sample_noise(profile, n, seed, "negative-noise");
    let mut tape = Tape::new();
    let noise_ref = tape.constant(noise);
    let logits = generate_logits(&mut tape, gen, Binding::Frozen, noise_ref)?;
    let values = tape.value(logits);
    drawn
        .iter()
        .enumerate()
        .map(|(i, &k)| select_top_k(values.row(i), k).map_err(AnalysisError::from))
        .collect()
}
