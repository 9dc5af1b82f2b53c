//! Heuristic negative samplers.
//!
//! Three schemes perturb or imitate observed hyperedges at increasing
//! difficulty for a discriminator:
//!
//! * sized (SNS): k uniformly random nodes, k drawn from the positive
//!   size histogram;
//! * motif (MNS): a connected set grown in the clique expansion by
//!   merging random incident edges;
//! * clique (CNS): an observed hyperedge with one node swapped for an
//!   outside node adjacent to all remaining members.
//!
//! Samplers reject candidates that equal an observed positive and
//! retry, up to a fixed budget; exhaustion emits the colliding set
//! with a warning rather than looping forever on dense inputs. MNS
//! growth that stalls in a too-small component pads with random nodes;
//! CNS with no valid swap anywhere falls back to MNS. All fallbacks
//! are counted in [`SamplerStats`].

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{CliqueGraph, Hypergraph, NodeSet, SizeDistribution};

/// Resample budget on collision with an observed positive, and retry
/// budget inside MNS (restarts) and CNS (hyperedge draws).
const RETRY_BUDGET: usize = 100;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("requested {k} distinct nodes but the hypergraph has {num_nodes}")]
    KTooLarge { k: usize, num_nodes: usize },
    #[error("clique expansion has no edges; cannot grow a connected set")]
    EmptyClique,
    #[error("hypergraph has no hyperedges to perturb")]
    EmptyHypergraph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Sns,
    Mns,
    Cns,
    /// Per-sample scheme drawn uniformly from the other three.
    Mixed,
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SamplerKind::Sns => "sns",
            SamplerKind::Mns => "mns",
            SamplerKind::Cns => "cns",
            SamplerKind::Mixed => "mixed",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sns" => Ok(SamplerKind::Sns),
            "mns" => Ok(SamplerKind::Mns),
            "cns" => Ok(SamplerKind::Cns),
            "mixed" => Ok(SamplerKind::Mixed),
            other => Err(format!("unknown sampler {other:?}; expected sns, mns, cns, or mixed")),
        }
    }
}

/// Fallback and rejection counters, for observability and for tests
/// that must know no degraded path was taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SamplerStats {
    /// Collision-rejection budget exhausted; an observed set was emitted.
    pub rejection_exhausted: usize,
    /// MNS growth stalled in a small component; output was padded.
    pub mns_stalls: usize,
    /// CNS found no valid swap; an MNS sample was substituted.
    pub cns_fallbacks: usize,
    /// Scheme choices resolved for mixed sampling: [sns, mns, cns].
    pub mixed_scheme_counts: [usize; 3],
}

/// Shared state for one sampling stream: the structure-visible train
/// hypergraph, its clique expansion, the positive size histogram, and
/// the observed-positive set used for rejection.
pub struct SamplerContext<'a> {
    hypergraph: &'a Hypergraph,
    clique: &'a CliqueGraph,
    sizes: &'a SizeDistribution,
    observed: &'a HashSet<NodeSet>,
    size_index: WeightedIndex<f64>,
    size_support: Vec<usize>,
    rng: ChaCha8Rng,
    stats: SamplerStats,
}

impl<'a> SamplerContext<'a> {
    pub fn new(
        hypergraph: &'a Hypergraph,
        clique: &'a CliqueGraph,
        sizes: &'a SizeDistribution,
        observed: &'a HashSet<NodeSet>,
        rng: ChaCha8Rng,
    ) -> Self {
        let (size_support, weights): (Vec<usize>, Vec<f64>) = sizes.entries().unzip();
        let size_index = WeightedIndex::new(&weights)
            .expect("size distributions always have positive total mass");
        Self {
            hypergraph,
            clique,
            sizes,
            observed,
            size_index,
            size_support,
            rng,
            stats: SamplerStats::default(),
        }
    }

    pub fn stats(&self) -> &SamplerStats {
        &self.stats
    }

    pub fn size_distribution(&self) -> &SizeDistribution {
        self.sizes
    }

    /// One size from the empirical positive-size histogram.
    pub fn draw_size(&mut self) -> usize {
        self.size_support[self.size_index.sample(&mut self.rng)]
    }

    /// k distinct uniform nodes.
    pub fn sns_sample(&mut self, k: usize) -> Result<NodeSet, SamplerError> {
        let n = self.hypergraph.num_nodes();
        if k > n {
            return Err(SamplerError::KTooLarge { k, num_nodes: n });
        }
        self.with_rejection("sns", |ctx| {
            let idx = rand::seq::index::sample(&mut ctx.rng, n, k).into_vec();
            Ok(NodeSet::new(idx).expect("k >= 1 indices"))
        })
    }

    /// A size-k set connected in the clique expansion, grown from a
    /// random clique edge by merging random incident expanding edges.
    /// k must be at least 2 (growth starts from an edge).
    pub fn mns_sample(&mut self, k: usize) -> Result<NodeSet, SamplerError> {
        assert!(k >= 2, "mns sizes start at 2, got {k}");
        if self.clique.num_edges() == 0 {
            return Err(SamplerError::EmptyClique);
        }
        if k > self.hypergraph.num_nodes() {
            return Err(SamplerError::KTooLarge {
                k,
                num_nodes: self.hypergraph.num_nodes(),
            });
        }
        self.with_rejection("mns", |ctx| ctx.mns_grown(k))
    }

    fn mns_grown(&mut self, k: usize) -> Result<NodeSet, SamplerError> {
        let mut stalled = Vec::new();
        for _ in 0..RETRY_BUDGET {
            let &(u, v) = self
                .clique
                .edges()
                .choose(&mut self.rng)
                .expect("clique edge list checked nonempty");
            let mut set: Vec<usize> = vec![u, v];
            set.sort_unstable();

            while set.len() < k {
                // Every expanding incident edge has exactly one endpoint
                // inside the set, so this enumeration is uniform over them.
                let candidates: Vec<usize> = set
                    .iter()
                    .flat_map(|&s| self.clique.neighbors(s))
                    .copied()
                    .filter(|t| set.binary_search(t).is_err())
                    .collect();
                let Some(&pick) = candidates.choose(&mut self.rng) else {
                    break;
                };
                // Merging a pair edge adds one node; a merge that could
                // overshoot keeps a random subset of the new nodes instead.
                let mut newly = vec![pick];
                if set.len() + newly.len() > k {
                    let keep = k - set.len();
                    newly.truncate(keep);
                }
                set.extend(newly);
                set.sort_unstable();
            }

            if set.len() == k {
                return Ok(NodeSet::new(set).expect("nonempty by construction"));
            }
            stalled = set;
        }

        // Component smaller than k everywhere we landed: pad with
        // uniform random outside nodes so the batch keeps its shape.
        self.stats.mns_stalls += 1;
        log::warn!(
            "mns: component growth stalled at {} of {k} nodes after {RETRY_BUDGET} restarts; padding randomly",
            stalled.len()
        );
        let outside: Vec<usize> = (0..self.hypergraph.num_nodes())
            .filter(|t| stalled.binary_search(t).is_err())
            .collect();
        let extra = rand::seq::index::sample(&mut self.rng, outside.len(), k - stalled.len());
        stalled.extend(extra.iter().map(|i| outside[i]));
        Ok(NodeSet::new(stalled).expect("nonempty by construction"))
    }

    /// An observed hyperedge with one node swapped for an outside node
    /// adjacent to every remaining member. Output size equals the
    /// source hyperedge's size.
    pub fn cns_sample(&mut self) -> Result<NodeSet, SamplerError> {
        if self.hypergraph.num_edges() == 0 {
            return Err(SamplerError::EmptyHypergraph);
        }
        let mut last_size = 0;
        let mut last_colliding: Option<NodeSet> = None;
        for _ in 0..RETRY_BUDGET {
            match self.cns_swap(&mut last_size) {
                Some(set) if !self.observed.contains(&set) => return Ok(set),
                Some(set) => last_colliding = Some(set),
                None => {
                    self.stats.cns_fallbacks += 1;
                    log::warn!(
                        "cns: no valid swap in {RETRY_BUDGET} hyperedge draws; substituting an mns sample of size {last_size}"
                    );
                    return self.mns_sample(last_size);
                }
            }
        }
        self.stats.rejection_exhausted += 1;
        log::warn!("cns: rejection budget exhausted; emitting an observed set");
        Ok(last_colliding.expect("at least one swap succeeded"))
    }

    /// One raw swap attempt loop: uniform hyperedge, uniform removed
    /// node, uniform valid replacement. None when no draw in the
    /// budget had any valid replacement.
    fn cns_swap(&mut self, last_size: &mut usize) -> Option<NodeSet> {
        for _ in 0..RETRY_BUDGET {
            let e = self.hypergraph.edge(self.rng.random_range(0..self.hypergraph.num_edges()));
            *last_size = e.len();
            let nodes = e.nodes();
            let v = nodes[self.rng.random_range(0..nodes.len())];
            let kept: Vec<usize> = nodes.iter().copied().filter(|&w| w != v).collect();

            // Intersect the neighbor lists of all kept nodes, walking
            // the smallest list and checking the rest by binary search.
            let smallest = kept
                .iter()
                .min_by_key(|&&w| self.clique.neighbors(w).len())
                .copied()
                .expect("hyperedges have at least 2 nodes");
            let candidates: Vec<usize> = self
                .clique
                .neighbors(smallest)
                .iter()
                .copied()
                .filter(|&u| !e.contains(u))
                .filter(|&u| kept.iter().all(|&w| w == smallest || self.clique.are_adjacent(u, w)))
                .collect();

            if let Some(&u) = candidates.choose(&mut self.rng) {
                let mut out = kept;
                out.push(u);
                return Some(NodeSet::new(out).expect("nonempty by construction"));
            }
        }
        None
    }

    /// One negative of the requested kind; mixed resolves a scheme first.
    pub fn sample(&mut self, kind: SamplerKind) -> Result<NodeSet, SamplerError> {
        match kind {
            SamplerKind::Sns => {
                let k = self.draw_size();
                self.sns_sample(k)
            }
            SamplerKind::Mns => {
                let k = self.draw_size();
                self.mns_sample(k)
            }
            SamplerKind::Cns => self.cns_sample(),
            SamplerKind::Mixed => {
                let scheme = self.rng.random_range(0..3);
                self.stats.mixed_scheme_counts[scheme] += 1;
                match scheme {
                    0 => {
                        let k = self.draw_size();
                        self.sns_sample(k)
                    }
                    1 => {
                        let k = self.draw_size();
                        self.mns_sample(k)
                    }
                    _ => self.cns_sample(),
                }
            }
        }
    }

    pub fn sample_batch(&mut self, kind: SamplerKind, n: usize) -> Result<Vec<NodeSet>, SamplerError> {
        (0..n).map(|_| self.sample(kind)).collect()
    }

    fn with_rejection<F>(&mut self, scheme: &str, mut draw: F) -> Result<NodeSet, SamplerError>
    where
        F: FnMut(&mut Self) -> Result<NodeSet, SamplerError>,
    {
        let mut last = None;
        for _ in 0..RETRY_BUDGET {
            let set = draw(self)?;
            if !self.observed.contains(&set) {
                return Ok(set);
            }
            last = Some(set);
        }
        self.stats.rejection_exhausted += 1;
        log::warn!("{scheme}: rejection budget exhausted; emitting an observed set");
        Ok(last.expect("budget is positive"))
    }
}

/// The four frozen negative sets evaluated against one positive list:
/// one per scheme plus the mixture, each with exactly `n` examples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenNegatives {
    pub sns: Vec<NodeSet>,
    pub mns: Vec<NodeSet>,
    pub cns: Vec<NodeSet>,
    pub mixed: Vec<NodeSet>,
}

impl FrozenNegatives {
    pub fn by_kind(&self, kind: SamplerKind) -> &[NodeSet] {
        match kind {
            SamplerKind::Sns => &self.sns,
            SamplerKind::Mns => &self.mns,
            SamplerKind::Cns => &self.cns,
            SamplerKind::Mixed => &self.mixed,
        }
    }

    pub const KINDS: [SamplerKind; 4] = [
        SamplerKind::Sns,
        SamplerKind::Mns,
        SamplerKind::Cns,
        SamplerKind::Mixed,
    ];
}

pub fn freeze_negative_sets(
    ctx: &mut SamplerContext<'_>,
    n: usize,
) -> Result<FrozenNegatives, SamplerError> {
    Ok(FrozenNegatives {
        sns: ctx.sample_batch(SamplerKind::Sns, n)?,
        mns: ctx.sample_batch(SamplerKind::Mns, n)?,
        cns: ctx.sample_batch(SamplerKind::Cns, n)?,
        mixed: ctx.sample_batch(SamplerKind::Mixed, n)?,
    })
}

#[cfg(test)]
mod tests;
