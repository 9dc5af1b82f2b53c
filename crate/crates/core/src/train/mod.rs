//! Adversarial training: the discriminator/generator losses, the
//! hardest-negative memory bank, batch-level alternation, and
//! validation-driven checkpoint selection.
//!
//! Per batch of positives S the loop (1) draws |S| generated negatives
//! (noise, logits, hard top-k), (2) takes one Adam step on the
//! discriminator loss
//!
//! ```text
//! L_D = −mean D(s)  +  (Σ D(g) + Σ D(m)) / (|S| + |M|)
//! ```
//!
//! over positives s, generated sets g, and memory sets m (with empty
//! memory the second term is plain mean D(g)), then (3) takes one Adam
//! step on the generator loss L_G = −mean D(g) with the discriminator
//! frozen, and (4) refreshes the memory bank with this batch's scored
//! negatives. Generated sets are scored through the gated pooling path
//! in both steps; memory sets, whose logits belong to a past
//! iteration, are scored with plain maxmin.

mod loop_;

pub use loop_::{
    disc_batch_loss, fit, freeze_split_negatives, gen_batch_loss, heuristic_fit,
    init_model_state, train_epoch, validation_aurocs, EpochHook, FitOutcome, TrainData,
};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{HypergraphError, NodeSet};
use crate::metrics::MetricError;
use crate::model::{ModelError, ModelProfile};
use crate::sampling::SamplerError;
use crate::tensor::{AdamState, ParamStore, TensorError};

pub const DEFAULT_MAX_EPOCHS: usize = 400;
pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_CLIP: f64 = 5.0;
/// Appendix grid the CLI sweeps over.
pub const DISC_LR_GRID: [f64; 4] = [5e-3, 5e-4, 5e-5, 5e-6];
pub const GEN_LR_GRID: [f64; 4] = [1e-4, 1e-5, 1e-6, 1e-7];
pub const MEMORY_GRID: [usize; 3] = [0, 32, 128];

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("positive batch is empty")]
    EmptyPositives,
    #[error("positive and generated batches differ in size: {pos} vs {gen}")]
    BatchMismatch { pos: usize, gen: usize },
    #[error("empty score list for {0}")]
    EmptyScores(&'static str),
    #[error("{0}")]
    ShapeMismatch(String),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged {
        epoch: usize,
        detail: String,
        /// Best checkpoint reached before the blow-up, for dumping.
        last_good: Box<Checkpoint>,
    },
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

impl TrainError {
    /// Non-finite values anywhere in the numeric path count as
    /// divergence and trigger the abort-with-dump guard.
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            TrainError::Tensor(TensorError::NonFinite { .. })
                | TrainError::Model(ModelError::Tensor(TensorError::NonFinite { .. }))
        )
    }
}

/// Capacity-bounded store of the highest-scoring negatives from the
/// previous iteration. Stored scores are the discriminator outputs of
/// the iteration that inserted the entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MemoryBank {
    capacity: usize,
    entries: Vec<(NodeSet, f64)>,
}

impl MemoryBank {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(NodeSet, f64)] {
        &self.entries
    }

    pub fn sets(&self) -> Vec<NodeSet> {
        self.entries.iter().map(|(s, _)| s.clone()).collect()
    }
}

/// Top-capacity merge of this iteration's scored candidates with the
/// previous bank. Candidates come first, so a re-generated set keeps
/// its fresh score; score ties keep the earlier position (stable sort).
pub fn update_memory(bank: &MemoryBank, candidates: &[(NodeSet, f64)]) -> MemoryBank {
    let mut seen: HashSet<&NodeSet> = HashSet::new();
    let mut merged: Vec<(NodeSet, f64)> = Vec::new();
    for (set, score) in candidates.iter().chain(bank.entries.iter()) {
        if seen.insert(set) {
            merged.push((set.clone(), *score));
        }
    }
    merged.sort_by(|a, b| b.1.total_cmp(&a.1));
    merged.truncate(bank.capacity);
    MemoryBank {
        capacity: bank.capacity,
        entries: merged,
    }
}

/// Everything that changes while training.
#[derive(Clone, Debug)]
pub struct ModelState {
    pub disc: ParamStore,
    pub gen: ParamStore,
    pub disc_adam: AdamState,
    pub gen_adam: AdamState,
    pub memory: MemoryBank,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub disc_lr: f64,
    pub gen_lr: f64,
    pub memory_capacity: usize,
    pub seed: u64,
    /// Global gradient-norm ceiling; None disables clipping.
    pub clip: Option<f64>,
    pub profile: ModelProfile,
}

/// Per-epoch loss summary, averaged over batches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_d: f64,
    pub l_g: f64,
    pub mean_pos: f64,
    pub mean_gen: f64,
    /// Averaged over batches where the bank was nonempty; 0 if it
    /// stayed empty the whole epoch.
    pub mean_mem: f64,
    pub batches: usize,
}

/// One line of the training log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub losses: LossReport,
    /// AUROC against the four frozen validation sets, in sampler order
    /// sns, mns, cns, mixed.
    pub val_auroc: [f64; 4],
    pub val_auroc_avg: f64,
}

/// Parameter snapshot at one epoch, with its validation quality.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub disc: ParamStore,
    pub gen: ParamStore,
    pub epoch: usize,
    pub val_auroc: [f64; 4],
    pub val_auroc_avg: f64,
}

/// Eq.-style discriminator loss on raw score lists. With memory:
/// −mean(pos) + (Σ gen + Σ mem) / (|S| + |M|); without: −mean(pos) +
/// mean(gen).
pub fn discriminator_loss(pos: &[f64], gen: &[f64], mem: &[f64]) -> Result<f64, TrainError> {
    if pos.is_empty() {
        return Err(TrainError::EmptyPositives);
    }
    if pos.len() != gen.len() {
        return Err(TrainError::BatchMismatch {
            pos: pos.len(),
            gen: gen.len(),
        });
    }
    let mean_pos: f64 = pos.iter().sum::<f64>() / pos.len() as f64;
    let neg_mass: f64 = gen.iter().chain(mem).sum::<f64>() / (gen.len() + mem.len()) as f64;
    Ok(-mean_pos + neg_mass)
}

/// L_G = −mean(gen_scores).
pub fn generator_loss(gen: &[f64]) -> Result<f64, TrainError> {
    if gen.is_empty() {
        return Err(TrainError::EmptyScores("generator loss"));
    }
    Ok(-(gen.iter().sum::<f64>() / gen.len() as f64))
}
