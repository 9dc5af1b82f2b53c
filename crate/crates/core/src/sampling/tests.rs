use std::collections::HashSet;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hypergraph::{clique_adjacency, CliqueGraph, Hypergraph, NodeSet, SizeDistribution};

use super::*;

struct Fixture {
    hypergraph: Hypergraph,
    clique: CliqueGraph,
    sizes: SizeDistribution,
    observed: HashSet<NodeSet>,
}

impl Fixture {
    fn new(num_nodes: usize, edges: &[&[usize]]) -> Self {
        let sets: Vec<NodeSet> = edges
            .iter()
            .map(|e| NodeSet::new(e.to_vec()).unwrap())
            .collect();
        let hypergraph = Hypergraph::new(num_nodes, sets.clone()).unwrap();
        let clique = clique_adjacency(&hypergraph);
        let sizes = SizeDistribution::from_edges(&sets).unwrap();
        let observed = sets.into_iter().collect();
        Self {
            hypergraph,
            clique,
            sizes,
            observed,
        }
    }

    fn ctx(&self, seed: u64) -> SamplerContext<'_> {
        SamplerContext::new(
            &self.hypergraph,
            &self.clique,
            &self.sizes,
            &self.observed,
            ChaCha8Rng::seed_from_u64(seed),
        )
    }
}

/// BFS over the clique expansion restricted to `set`.
fn connected_in_clique(set: &NodeSet, clique: &CliqueGraph) -> bool {
    let nodes = set.nodes();
    let mut seen = vec![false; nodes.len()];
    let mut queue = vec![0];
    seen[0] = true;
    while let Some(i) = queue.pop() {
        for (j, &v) in nodes.iter().enumerate() {
            if !seen[j] && clique.are_adjacent(nodes[i], v) {
                seen[j] = true;
                queue.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// True when `out` is some hyperedge with exactly one node swapped for
/// a replacement adjacent to all retained nodes.
fn is_one_node_swap(out: &NodeSet, h: &Hypergraph, clique: &CliqueGraph) -> bool {
    h.hyperedges().iter().any(|e| {
        if e.len() != out.len() {
            return false;
        }
        let shared: Vec<usize> = out.iter().filter(|&u| e.contains(u)).collect();
        if shared.len() != e.len() - 1 {
            return false;
        }
        let added: Vec<usize> = out.iter().filter(|&u| !e.contains(u)).collect();
        added.len() == 1 && shared.iter().all(|&w| clique.are_adjacent(added[0], w))
    })
}

#[test]
fn draw_size_degenerate_histogram() {
    let f = Fixture::new(4, &[&[0, 1, 2]]);
    let mut ctx = f.ctx(0);
    for _ in 0..100 {
        assert_eq!(ctx.draw_size(), 3);
    }
}

#[test]
fn draw_size_matches_histogram_frequencies() {
    // Two sizes at probability 1/2 each; 10,000 draws stay within a
    // five-sigma binomial band around one half.
    let f = Fixture::new(8, &[&[0, 1], &[2, 3, 4, 5]]);
    let mut ctx = f.ctx(1);
    let draws = 10_000;
    let twos = (0..draws).filter(|_| ctx.draw_size() == 2).count();
    let frac = twos as f64 / draws as f64;
    assert!((0.45..=0.55).contains(&frac), "fraction of 2s = {frac}");
}

#[test]
fn sns_full_node_set_when_k_equals_n() {
    let f = Fixture::new(3, &[&[0, 1]]);
    let mut ctx = f.ctx(2);
    let s = ctx.sns_sample(3).unwrap();
    assert_eq!(s.nodes(), &[0, 1, 2]);
}

#[test]
fn sns_uniform_over_pairs() {
    // 3 nodes, no observed pair: each of the 3 pairs at 1/3 +- 0.02
    // over 30,000 draws.
    let edges = [&[0usize, 1, 2][..]];
    let f = Fixture::new(3, &edges);
    let mut ctx = f.ctx(3);
    let mut counts = std::collections::HashMap::new();
    let draws = 30_000;
    for _ in 0..draws {
        let s = ctx.sns_sample(2).unwrap();
        *counts.entry(s).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 3);
    for (pair, c) in counts {
        let frac = c as f64 / draws as f64;
        assert!(
            (frac - 1.0 / 3.0).abs() <= 0.02,
            "pair {:?} frequency {frac}",
            pair.nodes()
        );
    }
}

#[test]
fn sns_k_too_large_is_an_error() {
    let f = Fixture::new(3, &[&[0, 1]]);
    let mut ctx = f.ctx(4);
    assert!(matches!(
        ctx.sns_sample(4),
        Err(SamplerError::KTooLarge { k: 4, num_nodes: 3 })
    ));
}

#[test]
fn sns_rejects_observed_sets() {
    // Only 3 pairs exist and 2 are observed: every emitted pair must
    // be the remaining one.
    let f = Fixture::new(3, &[&[0, 1], &[1, 2]]);
    let mut ctx = f.ctx(5);
    for _ in 0..50 {
        let s = ctx.sns_sample(2).unwrap();
        assert_eq!(s.nodes(), &[0, 2]);
    }
    assert_eq!(ctx.stats().rejection_exhausted, 0);
}

#[test]
fn mns_k2_is_a_clique_edge() {
    let f = Fixture::new(6, &[&[0, 1, 2], &[3, 4], &[4, 5]]);
    let mut ctx = f.ctx(6);
    for _ in 0..100 {
        let s = ctx.mns_sample(2).unwrap();
        if f.observed.contains(&s) {
            continue; // rejection may emit observed sets only on exhaustion
        }
        let n = s.nodes();
        assert!(f.clique.are_adjacent(n[0], n[1]), "{n:?} not a clique edge");
    }
}

#[test]
fn mns_path_graph_forced_triple() {
    // Clique expansion is the path 0-1-2; the only connected triple is
    // all of it.
    let f = Fixture::new(3, &[&[0, 1], &[1, 2]]);
    let mut ctx = f.ctx(7);
    for _ in 0..50 {
        let s = ctx.mns_sample(3).unwrap();
        assert_eq!(s.nodes(), &[0, 1, 2]);
    }
    assert_eq!(ctx.stats().mns_stalls, 0);
}

#[test]
fn mns_outputs_are_connected() {
    let f = Fixture::new(9, &[&[0, 1, 2], &[2, 3], &[3, 4, 5], &[5, 6], &[6, 7, 8]]);
    let mut ctx = f.ctx(8);
    for _ in 0..500 {
        let k = ctx.draw_size();
        let s = ctx.mns_sample(k).unwrap();
        assert!(connected_in_clique(&s, &f.clique), "{:?}", s.nodes());
    }
    assert_eq!(ctx.stats().mns_stalls, 0);
}

#[test]
fn mns_stall_pads_to_requested_size() {
    // The only clique component has 2 nodes; k = 5 must stall and pad.
    let f = Fixture::new(10, &[&[0, 1]]);
    let mut ctx = f.ctx(9);
    let s = ctx.mns_sample(5).unwrap();
    assert_eq!(s.len(), 5);
    assert_eq!(ctx.stats().mns_stalls, 1);
    assert!(s.contains(0) && s.contains(1));
}

#[test]
fn cns_all_swaps_observed_emits_with_warning() {
    // Path graph: both possible swaps land on observed edges, so the
    // rejection budget runs out and an observed pair is emitted.
    let f = Fixture::new(3, &[&[0, 1], &[1, 2]]);
    let mut ctx = f.ctx(10);
    let s = ctx.cns_sample().unwrap();
    assert!(f.observed.contains(&s));
    assert_eq!(ctx.stats().rejection_exhausted, 1);
}

#[test]
fn cns_forced_swap_collides_and_retries() {
    // From {0,1,2} the only swap is 2 -> 3 giving {0,1,3}, observed;
    // and symmetrically from {0,1,3}. Every attempt collides.
    let f = Fixture::new(4, &[&[0, 1, 2], &[0, 1, 3]]);
    let mut ctx = f.ctx(11);
    let s = ctx.cns_sample().unwrap();
    assert!(f.observed.contains(&s));
    assert_eq!(ctx.stats().rejection_exhausted, 1);
    assert_eq!(ctx.stats().cns_fallbacks, 0);
}

#[test]
fn cns_valid_swap_found() {
    let f = Fixture::new(4, &[&[0, 1, 2], &[2, 3], &[1, 3], &[0, 3]]);
    let mut ctx = f.ctx(12);
    for _ in 0..200 {
        let s = ctx.cns_sample().unwrap();
        assert!(!f.observed.contains(&s), "{:?}", s.nodes());
        assert!(is_one_node_swap(&s, &f.hypergraph, &f.clique), "{:?}", s.nodes());
    }
    assert_eq!(ctx.stats().rejection_exhausted, 0);
    assert_eq!(ctx.stats().cns_fallbacks, 0);
}

#[test]
fn cns_no_candidates_falls_back_to_mns() {
    // Two disjoint pairs: no node outside an edge is adjacent to the
    // kept node, so every swap attempt finds no candidate.
    let f = Fixture::new(4, &[&[0, 1], &[2, 3]]);
    let mut ctx = f.ctx(13);
    let s = ctx.cns_sample().unwrap();
    assert_eq!(ctx.stats().cns_fallbacks, 1);
    assert_eq!(s.len(), 2);
}

#[test]
fn batch_of_zero_is_empty() {
    let f = Fixture::new(4, &[&[0, 1, 2]]);
    let mut ctx = f.ctx(14);
    assert!(ctx.sample_batch(SamplerKind::Sns, 0).unwrap().is_empty());
}

#[test]
fn mixed_scheme_counts_are_balanced() {
    let f = Fixture::new(12, &[&[0, 1, 2], &[2, 3, 4], &[4, 5], &[5, 6, 7], &[7, 8, 9, 10]]);
    let mut ctx = f.ctx(15);
    let n = 30_000;
    ctx.sample_batch(SamplerKind::Mixed, n).unwrap();
    for &c in &ctx.stats().mixed_scheme_counts {
        assert!(
            (c as i64 - 10_000).abs() <= 300,
            "scheme count {c} outside 10000 +- 300"
        );
    }
}

#[test]
fn fixed_seed_reproduces_batches() {
    let f = Fixture::new(8, &[&[0, 1, 2], &[2, 3], &[3, 4, 5], &[5, 6, 7]]);
    let a = f.ctx(16).sample_batch(SamplerKind::Mixed, 64).unwrap();
    let b = f.ctx(16).sample_batch(SamplerKind::Mixed, 64).unwrap();
    assert_eq!(a, b);
}

#[test]
fn frozen_sets_have_equal_counts() {
    let f = Fixture::new(8, &[&[0, 1, 2], &[2, 3], &[3, 4, 5], &[5, 6, 7]]);
    let mut ctx = f.ctx(17);
    let frozen = freeze_negative_sets(&mut ctx, 12).unwrap();
    for kind in FrozenNegatives::KINDS {
        assert_eq!(frozen.by_kind(kind).len(), 12);
    }
}

#[test]
fn sampler_kind_round_trips_through_strings() {
    for kind in FrozenNegatives::KINDS {
        let s = kind.to_string();
        assert_eq!(s.parse::<SamplerKind>().unwrap(), kind);
    }
    assert!("bogus".parse::<SamplerKind>().is_err());
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn arb_hypergraph() -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
        (5usize..16).prop_flat_map(|n| {
            let edge = proptest::collection::vec(0..n, 2..5);
            (Just(n), proptest::collection::vec(edge, 2..10))
        })
    }

    proptest! {
        #[test]
        fn samplers_respect_documented_shapes((n, raw_edges) in arb_hypergraph(), seed in 0u64..1000) {
            let sets: Vec<NodeSet> = raw_edges
                .into_iter()
                .filter_map(|e| NodeSet::new(e).ok())
                .filter(|s| s.len() >= 2)
                .collect();
            prop_assume!(sets.len() >= 2);
            let hypergraph = Hypergraph::new(n, sets.clone()).unwrap();
            let clique = clique_adjacency(&hypergraph);
            let sizes = SizeDistribution::from_edges(&sets).unwrap();
            let observed: HashSet<NodeSet> = sets.into_iter().collect();
            let mut ctx = SamplerContext::new(
                &hypergraph, &clique, &sizes, &observed,
                ChaCha8Rng::seed_from_u64(seed),
            );

            for _ in 0..8 {
                let k = ctx.draw_size();
                prop_assert!(sizes.probability(k) > 0.0);

                let s = ctx.sns_sample(k).unwrap();
                prop_assert_eq!(s.len(), k);

                let before_stalls = ctx.stats().mns_stalls;
                let m = ctx.mns_sample(k).unwrap();
                prop_assert_eq!(m.len(), k);
                if ctx.stats().mns_stalls == before_stalls {
                    prop_assert!(connected_in_clique(&m, &clique));
                }

                let before_fb = ctx.stats().cns_fallbacks;
                let before_rej = ctx.stats().rejection_exhausted;
                let c = ctx.cns_sample().unwrap();
                if ctx.stats().cns_fallbacks == before_fb
                    && ctx.stats().rejection_exhausted == before_rej
                {
                    prop_assert!(is_one_node_swap(&c, &hypergraph, &clique));
                    prop_assert!(!observed.contains(&c));
                }
            }
        }
    }
}
