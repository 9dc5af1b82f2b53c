//! Train/validation/test splitting and train-structure masking.

use rand::seq::SliceRandom;

use crate::rng;

use super::{Hypergraph, HypergraphError, SplitBundle};

/// Shuffles the hyperedge list and cuts ⌊0.6n⌋ / ⌊0.2n⌋ / remainder.
/// A further ⌈|train|/6⌉ train hyperedges, chosen uniformly, are
/// marked structure-invisible: they stay positive examples but are
/// withheld from the incidence structure the encoder aggregates over.
pub fn split_hyperedges(h: &Hypergraph, seed: u64) -> Result<SplitBundle, HypergraphError> {
    let n = h.num_edges();
    if n < 5 {
        return Err(HypergraphError::TooFewEdges { needed: 5, got: n });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, "split-order"));

    let n_train = (n as f64 * 0.6).floor() as usize;
    let n_val = (n as f64 * 0.2).floor() as usize;
    let train_indices: Vec<usize> = order[..n_train].to_vec();
    let validation_indices: Vec<usize> = order[n_train..n_train + n_val].to_vec();
    let test_indices: Vec<usize> = order[n_train + n_val..].to_vec();

    let n_masked = n_train.div_ceil(6);
    let mut mask_order: Vec<usize> = (0..n_train).collect();
    mask_order.shuffle(&mut rng::stream(seed, "split-mask"));
    let mut structure_visible = vec![true; n_train];
    for &pos in &mask_order[..n_masked] {
        structure_visible[pos] = false;
    }

    let collect = |idx: &[usize]| idx.iter().map(|&i| h.edge(i).clone()).collect();
    Ok(SplitBundle {
        train: collect(&train_indices),
        validation: collect(&validation_indices),
        test: collect(&test_indices),
        structure_visible,
        train_indices,
        validation_indices,
        test_indices,
    })
}

/// The hypergraph the encoder sees: structure-visible train hyperedges
/// only, over the full node set.
pub fn structure_hypergraph(h: &Hypergraph, b: &SplitBundle) -> Hypergraph {
    let visible: Vec<_> = b
        .train
        .iter()
        .zip(&b.structure_visible)
        .filter(|(_, &vis)| vis)
        .map(|(e, _)| e.clone())
        .collect();
    Hypergraph::new(h.num_nodes(), visible)
        .expect("train hyperedges were validated when the source graph was built")
}
