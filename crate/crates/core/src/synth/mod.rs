//! Synthetic planted benchmark: hyperedges concentrated inside hidden
//! node communities and, within a community, on near-intervals of a
//! coordinate ordering. Features expose the community indicator and
//! the coordinate, so held-out edges stay recognizable to a model
//! that learns the feature geometry. Small enough to train on in
//! seconds.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::hypergraph::{FeatureMatrix, Hypergraph, HypergraphError, NodeSet};
use crate::rng;
use crate::tensor::Matrix;

/// Distinct-edge resampling budget before declaring the parameter
/// combination infeasible.
const DEDUP_BUDGET: usize = 1000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthParams {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub communities: usize,
    /// Hyperedge sizes are uniform over min_size..=max_size.
    pub min_size: usize,
    pub max_size: usize,
    /// Per-member probability of drawing from the whole node set
    /// instead of the edge's community. 0 keeps every edge inside one
    /// community.
    pub edge_noise: f64,
    /// Standard deviation of the Gaussian jitter on the coordinate
    /// feature appended after the community indicator.
    pub feature_noise: f64,
    /// How strongly edge members concentrate around the edge center
    /// in the community's coordinate ordering: member u joins with
    /// weight exp(−tightness · |rank(u) − rank(center)|). 0 falls
    /// back to uniform community subsets.
    pub tightness: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            num_nodes: 200,
            num_edges: 300,
            communities: 10,
            min_size: 3,
            max_size: 5,
            edge_noise: 0.02,
            feature_noise: 0.05,
            tightness: 2.0,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::Infeasible(msg));
        if self.num_nodes == 0 || self.num_edges == 0 {
            return fail("node and edge counts must be positive".into());
        }
        if self.communities == 0 || self.communities > self.num_nodes {
            return fail(format!(
                "{} communities cannot partition {} nodes",
                self.communities, self.num_nodes
            ));
        }
        if self.min_size < 2 || self.max_size < self.min_size {
            return fail(format!(
                "size range {}..={} is not a valid hyperedge size range",
                self.min_size, self.max_size
            ));
        }
        // Every community block must fit the largest edge.
        let smallest_block = self.num_nodes / self.communities;
        if smallest_block < self.max_size {
            return fail(format!(
                "communities of ~{} nodes cannot host hyperedges of size {}",
                smallest_block, self.max_size
            ));
        }
        if !(0.0..=1.0).contains(&self.edge_noise) {
            return fail(format!("edge noise {} outside [0, 1]", self.edge_noise));
        }
        if self.feature_noise < 0.0 || !self.feature_noise.is_finite() {
            return fail(format!("feature noise {} invalid", self.feature_noise));
        }
        if self.tightness < 0.0 || !self.tightness.is_finite() {
            return fail(format!("tightness {} invalid", self.tightness));
        }
        Ok(())
    }
}

/// Community of a node under the contiguous-blocks partition; the
/// first `num_nodes % communities` blocks take one extra node.
pub fn community_of(params: &SynthParams, node: usize) -> usize {
    let base = params.num_nodes / params.communities;
    let extra = params.num_nodes % params.communities;
    let boundary = (base + 1) * extra;
    if node < boundary {
        node / (base + 1)
    } else {
        extra + (node - boundary) / base
    }
}

fn community_members(params: &SynthParams, c: usize) -> std::ops::Range<usize> {
    let base = params.num_nodes / params.communities;
    let extra = params.num_nodes % params.communities;
    let start = if c < extra {
        c * (base + 1)
    } else {
        extra * (base + 1) + (c - extra) * base
    };
    let len = if c < extra { base + 1 } else { base };
    start..start + len
}

/// The planted hypergraph: each edge picks a community, a size, and a
/// center node, then fills itself with community members weighted
/// toward the center's neighborhood in the community's coordinate
/// ordering; each slot escapes to a uniform node with probability
/// `edge_noise`. Positives are thus near-intervals of the hidden
/// ordering, so their coordinate spread is minimal for their size.
/// That is the regularity a discriminator can learn and that holds
/// for held-out edges just as much as for observed ones. Duplicate
/// edges are resampled so the result is a simple hypergraph.
pub fn planted_hypergraph(params: &SynthParams) -> Result<Hypergraph, SynthError> {
    params.validate()?;
    let features = planted_features(params)?;
    let x = features.matrix();

    // Nodes of each community sorted by the first coordinate; the
    // member weights act on positions in this ordering.
    let orderings: Vec<Vec<usize>> = (0..params.communities)
        .map(|c| {
            let mut nodes: Vec<usize> = community_members(params, c).collect();
            nodes.sort_by(|&a, &b| {
                x.get(a, params.communities)
                    .total_cmp(&x.get(b, params.communities))
            });
            nodes
        })
        .collect();

    let mut r = rng::stream(params.seed, "synth-edges");
    let mut edges: Vec<NodeSet> = Vec::with_capacity(params.num_edges);
    let mut seen: std::collections::HashSet<NodeSet> = std::collections::HashSet::new();

    for _ in 0..params.num_edges {
        let mut accepted = false;
        for _ in 0..DEDUP_BUDGET {
            let c = r.random_range(0..params.communities);
            let ordering = &orderings[c];
            let k = r.random_range(params.min_size..=params.max_size);
            let center_rank = r.random_range(0..ordering.len());

            let mut nodes: Vec<usize> = vec![ordering[center_rank]];
            let mut budget = DEDUP_BUDGET;
            while nodes.len() < k && budget > 0 {
                budget -= 1;
                let v = if r.random_bool(params.edge_noise) {
                    r.random_range(0..params.num_nodes)
                } else {
                    rank_weighted_member(params, ordering, center_rank, &nodes, &mut r)
                };
                if !nodes.contains(&v) {
                    nodes.push(v);
                }
            }
            if nodes.len() < k {
                continue;
            }
            let set = NodeSet::new(nodes).expect("k >= 2 members collected");
            if seen.insert(set.clone()) {
                edges.push(set);
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(SynthError::Infeasible(format!(
                "could not draw {} distinct hyperedges",
                params.num_edges
            )));
        }
    }

    Ok(Hypergraph::new(params.num_nodes, edges)?)
}

/// One not-yet-chosen community member drawn with weight
/// exp(−tightness · |Δrank|) around the center's rank; tightness 0
/// degenerates to uniform. Falls back to the nearest unchosen rank
/// when every weight underflows to zero.
fn rank_weighted_member(
    params: &SynthParams,
    ordering: &[usize],
    center_rank: usize,
    chosen: &[usize],
    r: &mut rand_chacha::ChaCha8Rng,
) -> usize {
    let weights: Vec<f64> = ordering
        .iter()
        .enumerate()
        .map(|(rank, v)| {
            if chosen.contains(v) {
                0.0
            } else {
                let d = rank.abs_diff(center_rank) as f64;
                (-params.tightness * d).exp()
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        let nearest = (0..ordering.len())
            .filter(|&rank| !chosen.contains(&ordering[rank]))
            .min_by_key(|&rank| rank.abs_diff(center_rank));
        return match nearest {
            Some(rank) => ordering[rank],
            // Community exhausted; the caller rejects the repeat.
            None => ordering[center_rank],
        };
    }
    let mut pick = r.random_range(0.0..total);
    for (rank, w) in weights.iter().enumerate() {
        pick -= w;
        if pick <= 0.0 {
            return ordering[rank];
        }
    }
    ordering[ordering.len() - 1]
}

/// Community-indicator features plus one jittered coordinate: row v
/// is the one-hot vector of v's community followed by v's position
/// within the community, spread evenly over [−1, 1] and perturbed by
/// N(0, feature_noise²). The feature dim is the community count plus
/// one. Even spacing keeps the coordinate span of a hyperedge
/// proportional to how many ordering ranks it covers, which is the
/// planted regularity.
pub fn planted_features(params: &SynthParams) -> Result<FeatureMatrix, SynthError> {
    params.validate()?;
    let mut r = rng::stream(params.seed, "synth-features");
    let noise = Normal::new(0.0, params.feature_noise)
        .map_err(|e| SynthError::Infeasible(e.to_string()))?;
    let mut m = Matrix::zeros(params.num_nodes, params.communities + 1);
    for v in 0..params.num_nodes {
        let c = community_of(params, v);
        m.set(v, c, 1.0);
        let members = community_members(params, c);
        let pos = (v - members.start) as f64;
        let span = (members.len() - 1).max(1) as f64;
        let grid = 2.0 * pos / span - 1.0;
        m.set(v, params.communities, grid + noise.sample(&mut r));
    }
    Ok(FeatureMatrix::new(m)?)
}

/// Convenience pair used by the synth command and the test harness.
pub fn planted_dataset(params: &SynthParams) -> Result<(Hypergraph, FeatureMatrix), SynthError> {
    Ok((planted_hypergraph(params)?, planted_features(params)?))
}
