//! Adversarial hyperedge prediction.
//!
//! A hyperedge predictor is trained as the discriminator of a GAN-style
//! pair: a set encoder scores node sets, and a generator learns to emit
//! hard negative sets. The crate provides the hypergraph structures,
//! classical negative samplers, a small reverse-mode autodiff engine
//! the models are built on, the training loop, ranking metrics, and
//! the distribution-level analysis used to compare generated negatives
//! with real hyperedges.

pub mod analysis;
pub mod hypergraph;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sampling;
pub mod synth;
pub mod tensor;
pub mod train;
