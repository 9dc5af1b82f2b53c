//! Membership generator: Gaussian noise to one logit per node, then
//! hard top-k selection.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::hypergraph::NodeSet;
use crate::rng;
use crate::tensor::{Matrix, ParamStore, Tape, TensorRef};

use super::{bind, glorot, Binding, ModelError, ModelProfile};

/// Negative-side slope of the generator's leaky relu.
pub const GEN_LEAKY_SLOPE: f64 = 0.01;

pub fn init_generator_params(
    store: &mut ParamStore,
    profile: &ModelProfile,
    num_nodes: usize,
    seed: u64,
) -> Result<(), ModelError> {
    let (noise, h1, h2) = profile.generator.dims();
    if noise == 0 || h1 == 0 || h2 == 0 {
        return Err(ModelError::DimensionMismatch(
            "generator dims must be positive".to_string(),
        ));
    }
    let dims = [noise, h1, h2, num_nodes];
    for l in 0..3 {
        let mut r = rng::stream(seed, &format!("init.gen.l{l}"));
        store.register(&format!("gen.l{l}.w"), glorot(&mut r, dims[l], dims[l + 1]))?;
        store.register(&format!("gen.l{l}.b"), Matrix::zeros(1, dims[l + 1]))?;
    }
    Ok(())
}

/// m × noise_dim matrix of independent standard normal draws.
pub fn sample_noise(profile: &ModelProfile, m: usize, seed: u64, tag: &str) -> Matrix {
    let mut r: ChaCha8Rng = rng::stream(seed, tag);
    let mut out = Matrix::zeros(m, profile.generator.noise_dim());
    for v in out.data_mut() {
        *v = StandardNormal.sample(&mut r);
    }
    out
}

/// m × noise_dim noise rows in, m × num_nodes logit rows out.
pub fn generate_logits(
    tape: &mut Tape,
    store: &ParamStore,
    binding: Binding,
    noise: TensorRef,
) -> Result<TensorRef, ModelError> {
    let mut h = noise;
    for l in 0..3 {
        let w = bind(tape, store, &format!("gen.l{l}.w"), binding)?;
        let b = bind(tape, store, &format!("gen.l{l}.b"), binding)?;
        let lin = tape.matmul(h, w)?;
        h = tape.add_bias_row(lin, b)?;
        if l < 2 {
            h = tape.leaky_relu(h, GEN_LEAKY_SLOPE)?;
        }
    }
    Ok(h)
}

/// The k highest-logit nodes; equal logits resolve to the lower node
/// id, so selection is a pure function of the logit vector.
pub fn select_top_k(logits: &[f64], k: usize) -> Result<NodeSet, ModelError> {
    if k == 0 || k > logits.len() {
        return Err(ModelError::KOutOfRange { k, n: logits.len() });
    }
    let mut order: Vec<usize> = (0..logits.len()).collect();
    order.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(NodeSet::new(order).expect("k >= 1 selected nodes"))
}
