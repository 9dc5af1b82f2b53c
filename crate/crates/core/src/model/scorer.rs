//! Candidate scorer: [emb, 128, 8, 1] MLP with relu between layers and
//! a linear, unbounded output.

use crate::rng;
use crate::tensor::{Matrix, ParamStore, Tape, TensorRef};

use super::{bind, glorot, Binding, ModelError};

pub const SCORER_HIDDEN: [usize; 2] = [128, 8];

pub fn init_scorer_params(
    store: &mut ParamStore,
    emb_dim: usize,
    seed: u64,
) -> Result<(), ModelError> {
    let dims = [emb_dim, SCORER_HIDDEN[0], SCORER_HIDDEN[1], 1];
    for l in 0..3 {
        let mut r = rng::stream(seed, &format!("init.score.l{l}"));
        store.register(&format!("score.l{l}.w"), glorot(&mut r, dims[l], dims[l + 1]))?;
        store.register(&format!("score.l{l}.b"), Matrix::zeros(1, dims[l + 1]))?;
    }
    Ok(())
}

/// n × emb pooled vectors in, n × 1 scores out.
pub fn score_pooled(
    tape: &mut Tape,
    store: &ParamStore,
    binding: Binding,
    pooled: TensorRef,
) -> Result<TensorRef, ModelError> {
    let mut h = pooled;
    for l in 0..3 {
        let w = bind(tape, store, &format!("score.l{l}.w"), binding)?;
        let b = bind(tape, store, &format!("score.l{l}.b"), binding)?;
        let lin = tape.matmul(h, w)?;
        h = tape.add_bias_row(lin, b)?;
        if l < 2 {
            h = tape.relu(h)?;
        }
    }
    Ok(h)
}
