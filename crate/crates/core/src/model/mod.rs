//! The three networks: hypergraph encoder, maxmin set scorer
//! (together the discriminator), and the noise-to-membership
//! generator.
//!
//! Forward passes are built on a [`Tape`], so the same code serves
//! training (parameters bound trainable) and evaluation (parameters
//! bound frozen). The discriminator scores a node set by pooling the
//! set's embedding rows with elementwise max − min and feeding the
//! result to a small MLP; the score is an unbounded real. The
//! generator maps Gaussian noise to one logit per node; the k
//! highest-logit nodes form its candidate set.
//!
//! Discrete top-k selection has no gradient, so generated sets are
//! scored through a gated pooling path: each selected row is scaled by
//! the logistic value of its logit before pooling, which hands the
//! selected logits a gradient while the chosen set stays hard.

mod encoder;
mod generator;
mod pool;
mod scorer;

pub use encoder::{aggregation_operators, encode, init_encoder_params, AggPair};
pub use generator::{
    generate_logits, init_generator_params, sample_noise, select_top_k, GEN_LEAKY_SLOPE,
};
pub use pool::{gated_pool, gated_pool_on_tape, pool_maxmin, pool_maxmin_on_tape};
pub use scorer::{init_scorer_params, score_pooled, SCORER_HIDDEN};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::NodeSet;
use crate::tensor::{Matrix, ParamStore, Tape, TensorError, TensorRef};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("normalization exponents ({alpha}, {beta}) outside the supported grid {{(0,0), (1,1)}}")]
    BadNormalization { alpha: f64, beta: f64 },
    #[error("{0}")]
    DimensionMismatch(String),
    #[error("top-k selection needs 1 <= k <= {n}, got {k}")]
    KOutOfRange { k: usize, n: usize },
    #[error("node {node} outside embedding matrix with {rows} rows")]
    NodeOutOfRange { node: usize, rows: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Encoder/scorer/generator nonlinearity choices that map onto tape
/// primitives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: TensorRef) -> Result<TensorRef, TensorError> {
        match self {
            Activation::Relu => tape.relu(x),
            Activation::LeakyRelu => tape.leaky_relu(x, GEN_LEAKY_SLOPE),
            Activation::Sigmoid => tape.sigmoid(x),
        }
    }
}

/// Generator MLP widths: noise dim and two hidden widths; the output
/// width is always the node count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorProfile {
    /// [64, 256, 256, |V|]
    Small,
    /// [128, 1024, 1024, |V|]
    Large,
    Custom {
        noise_dim: usize,
        hidden1: usize,
        hidden2: usize,
    },
}

impl GeneratorProfile {
    pub fn dims(self) -> (usize, usize, usize) {
        match self {
            GeneratorProfile::Small => (64, 256, 256),
            GeneratorProfile::Large => (128, 1024, 1024),
            GeneratorProfile::Custom {
                noise_dim,
                hidden1,
                hidden2,
            } => (noise_dim, hidden1, hidden2),
        }
    }

    pub fn noise_dim(self) -> usize {
        self.dims().0
    }
}

/// Architecture hyperparameters shared by checkpoints and configs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelProfile {
    pub emb_dim: usize,
    pub layers: usize,
    pub activation: Activation,
    pub alpha: f64,
    pub beta: f64,
    pub generator: GeneratorProfile,
}

impl ModelProfile {
    /// Grid check: the degree-normalization exponents come in the two
    /// supported pairs only.
    pub fn validate(&self) -> Result<(), ModelError> {
        let pair = (self.alpha, self.beta);
        if pair != (0.0, 0.0) && pair != (1.0, 1.0) {
            return Err(ModelError::BadNormalization {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        if self.emb_dim == 0 || self.layers == 0 {
            return Err(ModelError::DimensionMismatch(format!(
                "embedding dim {} and layer count {} must be positive",
                self.emb_dim, self.layers
            )));
        }
        Ok(())
    }
}

/// How forward passes bind parameters: trainable leaves that receive
/// gradients, or frozen copies for the adversary's step and for
/// evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binding {
    Train,
    Frozen,
}

pub(crate) fn bind(
    tape: &mut Tape,
    store: &ParamStore,
    name: &str,
    binding: Binding,
) -> Result<TensorRef, TensorError> {
    match binding {
        Binding::Train => tape.param(store, name),
        Binding::Frozen => tape.frozen(store, name),
    }
}

/// Glorot-uniform initialization.
pub(crate) fn glorot(rng: &mut rand_chacha::ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    use rand::Rng;
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.random_range(-limit..=limit);
    }
    m
}

/// Discriminator scores for node sets under frozen parameters: one
/// shared encode, plain maxmin pooling per set, one scorer pass.
pub fn score_node_sets(
    profile: &ModelProfile,
    disc: &ParamStore,
    agg: &AggPair,
    features: &Matrix,
    sets: &[NodeSet],
) -> Result<Vec<f64>, ModelError> {
    if sets.is_empty() {
        return Ok(Vec::new());
    }
    let mut tape = Tape::new();
    let emb = encode(&mut tape, disc, Binding::Frozen, profile, agg, features)?;
    let pooled: Vec<TensorRef> = sets
        .iter()
        .map(|s| pool_maxmin_on_tape(&mut tape, emb, s))
        .collect::<Result<_, _>>()?;
    let batch = tape.concat_rows(&pooled)?;
    let scores = score_pooled(&mut tape, disc, Binding::Frozen, batch)?;
    Ok(tape.value(scores).data().to_vec())
}
