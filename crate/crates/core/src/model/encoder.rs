//! Hypergraph encoder: alternating node-to-edge and edge-to-node
//! aggregation with learned affine maps.
//!
//! Layer l computes
//!
//! ```text
//! X_E = σ(N X_V W_V + b_V)    N: edge-normalized incidence (|E|×|V|)
//! X_V = σ(M X_E W_E + b_E)    M: node-normalized incidence (|V|×|E|)
//! ```
//!
//! where N weights node v inside edge e by deg(v)^β / Σ_{u∈e} deg(u)^β
//! and M weights edge e at node v by |e|^α / Σ_{f∋v} |f|^α. With
//! (α, β) = (0, 0) both collapse to arithmetic means. An isolated
//! node's M row is all zero, so its embedding is σ(b_E) exactly.

use std::rc::Rc;

use crate::hypergraph::Hypergraph;
use crate::rng;
use crate::tensor::{Matrix, ParamStore, SparseMatrix, Tape, TensorRef};

use super::{bind, glorot, Binding, ModelError, ModelProfile};

/// The two constant aggregation operators for one hypergraph and one
/// exponent pair; shared across tapes by reference count.
#[derive(Clone, Debug)]
pub struct AggPair {
    /// |E| × |V|, rows normalized over each edge's members.
    pub node_to_edge: Rc<SparseMatrix>,
    /// |V| × |E|, rows normalized over each node's incident edges.
    pub edge_to_node: Rc<SparseMatrix>,
}

pub fn aggregation_operators(h: &Hypergraph, alpha: f64, beta: f64) -> AggPair {
    let mut to_edge = Vec::new();
    for (j, e) in h.hyperedges().iter().enumerate() {
        let weights: Vec<f64> = e
            .iter()
            .map(|v| (h.node_degree(v) as f64).powf(beta))
            .collect();
        let total: f64 = weights.iter().sum();
        for (v, w) in e.iter().zip(weights) {
            to_edge.push((j, v, w / total));
        }
    }

    let mut to_node = Vec::new();
    for v in 0..h.num_nodes() {
        let incident = h.edges_of_node(v);
        if incident.is_empty() {
            continue;
        }
        let weights: Vec<f64> = incident
            .iter()
            .map(|&j| (h.edge(j).len() as f64).powf(alpha))
            .collect();
        let total: f64 = weights.iter().sum();
        for (&j, w) in incident.iter().zip(weights) {
            to_node.push((v, j, w / total));
        }
    }

    AggPair {
        node_to_edge: Rc::new(SparseMatrix::from_triplets(
            h.num_edges(),
            h.num_nodes(),
            &to_edge,
        )),
        edge_to_node: Rc::new(SparseMatrix::from_triplets(
            h.num_nodes(),
            h.num_edges(),
            &to_node,
        )),
    }
}

fn wv(l: usize) -> String {
    format!("enc.l{l}.wv")
}
fn bv(l: usize) -> String {
    format!("enc.l{l}.bv")
}
fn we(l: usize) -> String {
    format!("enc.l{l}.we")
}
fn be(l: usize) -> String {
    format!("enc.l{l}.be")
}

/// Registers W_V/b_V/W_E/b_E for every layer. Layer 0 maps the feature
/// dim into the embedding dim; later layers stay at the embedding dim.
pub fn init_encoder_params(
    store: &mut ParamStore,
    profile: &ModelProfile,
    feature_dim: usize,
    seed: u64,
) -> Result<(), ModelError> {
    profile.validate()?;
    let emb = profile.emb_dim;
    for l in 0..profile.layers {
        let input = if l == 0 { feature_dim } else { emb };
        let mut r = rng::stream(seed, &format!("init.enc.l{l}"));
        store.register(&wv(l), glorot(&mut r, input, emb))?;
        store.register(&bv(l), Matrix::zeros(1, emb))?;
        store.register(&we(l), glorot(&mut r, emb, emb))?;
        store.register(&be(l), Matrix::zeros(1, emb))?;
    }
    Ok(())
}

/// Full encoder forward on the tape; returns the |V| × emb node
/// embedding matrix.
pub fn encode(
    tape: &mut Tape,
    store: &ParamStore,
    binding: Binding,
    profile: &ModelProfile,
    agg: &AggPair,
    features: &Matrix,
) -> Result<TensorRef, ModelError> {
    if features.rows() != agg.edge_to_node.rows() {
        return Err(ModelError::DimensionMismatch(format!(
            "features have {} rows but the structure graph has {} nodes",
            features.rows(),
            agg.edge_to_node.rows()
        )));
    }
    let mut x = tape.constant(features.clone());
    for l in 0..profile.layers {
        let w_v = bind(tape, store, &wv(l), binding)?;
        let b_v = bind(tape, store, &bv(l), binding)?;
        let w_e = bind(tape, store, &we(l), binding)?;
        let b_e = bind(tape, store, &be(l), binding)?;

        let agg_e = tape.spmm(&agg.node_to_edge, x)?;
        let lin_e = tape.matmul(agg_e, w_v)?;
        let pre_e = tape.add_bias_row(lin_e, b_v)?;
        let x_e = profile.activation.apply(tape, pre_e)?;

        let agg_v = tape.spmm(&agg.edge_to_node, x_e)?;
        let lin_v = tape.matmul(agg_v, w_e)?;
        let pre_v = tape.add_bias_row(lin_v, b_e)?;
        x = profile.activation.apply(tape, pre_v)?;
    }
    Ok(x)
}
