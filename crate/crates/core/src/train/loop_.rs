//! The batch loop: loss assembly on the tape, one-epoch alternation,
//! and the full fit driver with validation tracking.

use std::collections::HashSet;

use rand::seq::SliceRandom;

use crate::hypergraph::{
    clique_adjacency, structure_hypergraph, FeatureMatrix, Hypergraph, NodeSet, SizeDistribution,
    SplitBundle,
};
use crate::metrics::{auroc, ScoredExamples};
use crate::model::{
    aggregation_operators, encode, gated_pool_on_tape, generate_logits, init_encoder_params,
    init_generator_params, init_scorer_params, pool_maxmin_on_tape, sample_noise, score_node_sets,
    score_pooled, select_top_k, AggPair, Binding, ModelError, ModelProfile,
};
use crate::rng;
use crate::sampling::{freeze_negative_sets, FrozenNegatives, SamplerContext, SamplerKind};
use crate::tensor::{AdamState, Matrix, ParamStore, Tape, TensorRef};

use super::{
    update_memory, Checkpoint, EpochRecord, LossReport, MemoryBank, ModelState, TrainConfig,
    TrainError,
};

/// The per-epoch inputs that stay fixed across the whole run.
pub struct TrainData<'a> {
    pub agg: &'a AggPair,
    pub features: &'a Matrix,
    pub positives: &'a [NodeSet],
}

/// Called after every evaluated epoch (including the initial one at
/// epoch 0) with the fresh record and the live state.
pub type EpochHook<'a> = Option<&'a mut dyn FnMut(&EpochRecord, &ModelState)>;

pub struct FitOutcome {
    /// Snapshot at the best average validation AUROC (earliest epoch on
    /// ties, so epoch 0 wins when training never improves).
    pub best: Checkpoint,
    /// State after the last epoch, for resuming or inspection.
    pub final_state: ModelState,
    /// One record per evaluated epoch, starting at epoch 0.
    pub epochs: Vec<EpochRecord>,
}

/// Fresh parameter stores and optimizer state for one run. Encoder and
/// scorer live in the discriminator store; the generator has its own,
/// which is what keeps the two gradient flows provably separate.
pub fn init_model_state(
    profile: &ModelProfile,
    feature_dim: usize,
    num_nodes: usize,
    seed: u64,
    memory_capacity: usize,
) -> Result<ModelState, ModelError> {
    profile.validate()?;
    let mut disc = ParamStore::new();
    init_encoder_params(&mut disc, profile, feature_dim, seed)?;
    init_scorer_params(&mut disc, profile.emb_dim, seed)?;
    let mut gen = ParamStore::new();
    init_generator_params(&mut gen, profile, num_nodes, seed)?;
    Ok(ModelState {
        disc,
        gen,
        disc_adam: AdamState::new(),
        gen_adam: AdamState::new(),
        memory: MemoryBank::new(memory_capacity),
    })
}

/// Assembles the batch discriminator loss on the tape:
/// −mean(pos) + (Σ gen + Σ mem) / (|gen| + |mem|), the second term
/// collapsing to mean(gen) with empty memory. Positives and memory
/// sets pool plain maxmin; generated sets pool through their logits'
/// sigmoid gates when logits are given (the adversarial path) and
/// plain when not (heuristic negatives carry no logits). Returns
/// (loss, scores) with scores stacked pos ++ gen ++ mem, one row each.
#[allow(clippy::too_many_arguments)]
pub fn disc_batch_loss(
    tape: &mut Tape,
    disc: &ParamStore,
    disc_binding: Binding,
    profile: &ModelProfile,
    agg: &AggPair,
    features: &Matrix,
    logits: Option<TensorRef>,
    positives: &[NodeSet],
    generated: &[NodeSet],
    memory: &[NodeSet],
) -> Result<(TensorRef, TensorRef), TrainError> {
    if positives.is_empty() {
        return Err(TrainError::EmptyPositives);
    }
    if positives.len() != generated.len() {
        return Err(TrainError::BatchMismatch {
            pos: positives.len(),
            gen: generated.len(),
        });
    }
    let emb = encode(tape, disc, disc_binding, profile, agg, features)?;
    let mut pooled: Vec<TensorRef> =
        Vec::with_capacity(positives.len() + generated.len() + memory.len());
    for s in positives {
        pooled.push(pool_maxmin_on_tape(tape, emb, s)?);
    }
    for (row, s) in generated.iter().enumerate() {
        pooled.push(match logits {
            Some(logits) => gated_pool_on_tape(tape, emb, logits, row, s)?,
            None => pool_maxmin_on_tape(tape, emb, s)?,
        });
    }
    for s in memory {
        pooled.push(pool_maxmin_on_tape(tape, emb, s)?);
    }
    let stacked = tape.concat_rows(&pooled)?;
    let scores = score_pooled(tape, disc, disc_binding, stacked)?;

    let m = positives.len();
    let pos_idx: Vec<usize> = (0..m).collect();
    let gen_idx: Vec<usize> = (m..2 * m).collect();
    let pos_scores = tape.gather_rows(scores, &pos_idx)?;
    let gen_scores = tape.gather_rows(scores, &gen_idx)?;
    let mean_pos = tape.mean(pos_scores)?;
    let neg_pos = tape.neg(mean_pos)?;
    let neg_mass = if memory.is_empty() {
        tape.mean(gen_scores)?
    } else {
        let mem_idx: Vec<usize> = (2 * m..2 * m + memory.len()).collect();
        let mem_scores = tape.gather_rows(scores, &mem_idx)?;
        let gen_sum = tape.sum(gen_scores)?;
        let mem_sum = tape.sum(mem_scores)?;
        let total = tape.add(gen_sum, mem_sum)?;
        tape.scale(total, 1.0 / (m + memory.len()) as f64)?
    };
    let loss = tape.add(neg_pos, neg_mass)?;
    Ok((loss, scores))
}

/// Assembles L_G = −mean over the generated sets' gated scores, with
/// the discriminator applied under the given binding (frozen during
/// the G step). Returns (loss, scores).
pub fn gen_batch_loss(
    tape: &mut Tape,
    disc: &ParamStore,
    disc_binding: Binding,
    profile: &ModelProfile,
    agg: &AggPair,
    features: &Matrix,
    logits: TensorRef,
    generated: &[NodeSet],
) -> Result<(TensorRef, TensorRef), TrainError> {
    if generated.is_empty() {
        return Err(TrainError::EmptyScores("generator batch"));
    }
    let emb = encode(tape, disc, disc_binding, profile, agg, features)?;
    let mut pooled: Vec<TensorRef> = Vec::with_capacity(generated.len());
    for (row, s) in generated.iter().enumerate() {
        pooled.push(gated_pool_on_tape(tape, emb, logits, row, s)?);
    }
    let stacked = tape.concat_rows(&pooled)?;
    let scores = score_pooled(tape, disc, disc_binding, stacked)?;
    let mean = tape.mean(scores)?;
    let loss = tape.neg(mean)?;
    Ok((loss, scores))
}

enum NegativeSource {
    Generator,
    Heuristic(SamplerKind),
}

/// One adversarial epoch: per batch, a discriminator Adam step against
/// generated (and memory) negatives, a generator Adam step against the
/// frozen updated discriminator, then a memory refresh with this
/// batch's scored negatives.
pub fn train_epoch(
    state: &mut ModelState,
    data: &TrainData<'_>,
    ctx: &mut SamplerContext<'_>,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<LossReport, TrainError> {
    train_epoch_inner(state, data, ctx, cfg, &NegativeSource::Generator, epoch)
}

fn train_epoch_inner(
    state: &mut ModelState,
    data: &TrainData<'_>,
    ctx: &mut SamplerContext<'_>,
    cfg: &TrainConfig,
    source: &NegativeSource,
    epoch: usize,
) -> Result<LossReport, TrainError> {
    if cfg.batch_size == 0 {
        return Err(TrainError::ShapeMismatch(
            "batch size must be positive".to_string(),
        ));
    }
    let profile = &cfg.profile;
    let mut order: Vec<usize> = (0..data.positives.len()).collect();
    order.shuffle(&mut rng::stream(cfg.seed, &format!("shuffle.e{epoch}")));

    let mut sums = LossReport::default();
    let mut mem_batches = 0usize;

    for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
        let batch: Vec<NodeSet> = chunk.iter().map(|&i| data.positives[i].clone()).collect();
        let m = batch.len();
        let mem_sets = state.memory.sets();

        // D step. Generated logits enter frozen so no gradient reaches
        // the generator here; top-k selection reads their values.
        let mut tape = Tape::new();
        let (gen_sets, logits_d, noise) = match source {
            NegativeSource::Generator => {
                let noise = sample_noise(profile, m, cfg.seed, &format!("noise.e{epoch}.b{b}"));
                let sizes: Vec<usize> = (0..m).map(|_| ctx.draw_size()).collect();
                let noise_ref = tape.constant(noise.clone());
                let logits = generate_logits(&mut tape, &state.gen, Binding::Frozen, noise_ref)?;
                let logit_values = tape.value(logits).clone();
                let sets: Vec<NodeSet> = sizes
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| select_top_k(logit_values.row(i), k))
                    .collect::<Result<_, _>>()?;
                (sets, Some(logits), Some(noise))
            }
            NegativeSource::Heuristic(kind) => (ctx.sample_batch(*kind, m)?, None, None),
        };
        let (loss_d, scores_d) = disc_batch_loss(
            &mut tape,
            &state.disc,
            Binding::Train,
            profile,
            data.agg,
            data.features,
            logits_d,
            &batch,
            &gen_sets,
            &mem_sets,
        )?;
        let score_values = tape.value(scores_d).data().to_vec();
        let l_d = tape.value(loss_d).scalar_value();
        tape.backward(loss_d, &mut state.disc)?;
        state.disc_adam.step(&mut state.disc, cfg.disc_lr, cfg.clip)?;

        // G step against the just-updated, now frozen discriminator.
        let l_g = match &noise {
            Some(noise) => {
                let mut tape = Tape::new();
                let noise_ref = tape.constant(noise.clone());
                let logits_g = generate_logits(&mut tape, &state.gen, Binding::Train, noise_ref)?;
                let (loss_g, _) = gen_batch_loss(
                    &mut tape,
                    &state.disc,
                    Binding::Frozen,
                    profile,
                    data.agg,
                    data.features,
                    logits_g,
                    &gen_sets,
                )?;
                let l_g = tape.value(loss_g).scalar_value();
                tape.backward(loss_g, &mut state.gen)?;
                state.gen_adam.step(&mut state.gen, cfg.gen_lr, cfg.clip)?;
                l_g
            }
            None => 0.0,
        };

        // Memory refresh: this batch's negatives with the D-step
        // scores that judged them.
        let gen_scores = &score_values[m..2 * m];
        let candidates: Vec<(NodeSet, f64)> = gen_sets
            .into_iter()
            .zip(gen_scores.iter().copied())
            .collect();
        state.memory = update_memory(&state.memory, &candidates);

        sums.l_d += l_d;
        sums.l_g += l_g;
        sums.mean_pos += mean_of(&score_values[..m]);
        sums.mean_gen += mean_of(gen_scores);
        if !mem_sets.is_empty() {
            sums.mean_mem += mean_of(&score_values[2 * m..]);
            mem_batches += 1;
        }
        sums.batches += 1;
    }

    let b = sums.batches.max(1) as f64;
    Ok(LossReport {
        l_d: sums.l_d / b,
        l_g: sums.l_g / b,
        mean_pos: sums.mean_pos / b,
        mean_gen: sums.mean_gen / b,
        mean_mem: sums.mean_mem / mem_batches.max(1) as f64,
        batches: sums.batches,
    })
}

fn mean_of(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// AUROC of the given positives against each of the four frozen
/// negative sets, plus the average the checkpoint choice uses. One
/// shared encoder pass scores everything.
pub fn validation_aurocs(
    profile: &ModelProfile,
    disc: &ParamStore,
    agg: &AggPair,
    features: &Matrix,
    positives: &[NodeSet],
    negatives: &FrozenNegatives,
) -> Result<([f64; 4], f64), TrainError> {
    let mut sets: Vec<NodeSet> = positives.to_vec();
    for kind in FrozenNegatives::KINDS {
        sets.extend_from_slice(negatives.by_kind(kind));
    }
    let scores = score_node_sets(profile, disc, agg, features, &sets)?;
    let p = positives.len();
    let mut out = [0.0f64; 4];
    let mut offset = p;
    for (slot, kind) in FrozenNegatives::KINDS.iter().enumerate() {
        let n = negatives.by_kind(*kind).len();
        let examples = ScoredExamples::from_parts(&scores[..p], &scores[offset..offset + n])?;
        out[slot] = auroc(&examples)?;
        offset += n;
    }
    let avg = out.iter().sum::<f64>() / 4.0;
    Ok((out, avg))
}

/// Draws the frozen validation and test negatives (one batch per
/// scheme, sized like the corresponding positive split) from the
/// structure-visible graph, rejecting observed hyperedges from the
/// full dataset. Same seed, same sets, independent of training.
pub fn freeze_split_negatives(
    h: &Hypergraph,
    bundle: &SplitBundle,
    seed: u64,
) -> Result<(FrozenNegatives, FrozenNegatives), TrainError> {
    let structure = structure_hypergraph(h, bundle);
    let clique = clique_adjacency(&structure);
    let sizes = SizeDistribution::from_edges(&bundle.train)?;
    let observed: HashSet<NodeSet> = bundle
        .train
        .iter()
        .chain(&bundle.validation)
        .chain(&bundle.test)
        .cloned()
        .collect();
    let mut ctx = SamplerContext::new(
        &structure,
        &clique,
        &sizes,
        &observed,
        rng::stream(seed, "freeze-negatives"),
    );
    let val = freeze_negative_sets(&mut ctx, bundle.validation.len())?;
    let test = freeze_negative_sets(&mut ctx, bundle.test.len())?;
    Ok((val, test))
}

/// Full adversarial training run. Evaluates the initial parameters as
/// epoch 0 (so max_epochs 0 returns them), trains max_epochs epochs,
/// and returns the snapshot with the best average validation AUROC. A
/// non-finite loss anywhere aborts with the best checkpoint attached.
pub fn fit(
    h: &Hypergraph,
    features: &FeatureMatrix,
    bundle: &SplitBundle,
    val_negatives: &FrozenNegatives,
    cfg: &TrainConfig,
    hook: EpochHook<'_>,
) -> Result<FitOutcome, TrainError> {
    fit_inner(h, features, bundle, val_negatives, cfg, NegativeSource::Generator, hook)
}

/// Ablation run: the generator is replaced by a fixed sampling scheme,
/// its loss disabled. Everything else (memory, checkpointing) matches
/// `fit`.
pub fn heuristic_fit(
    h: &Hypergraph,
    features: &FeatureMatrix,
    bundle: &SplitBundle,
    val_negatives: &FrozenNegatives,
    kind: SamplerKind,
    cfg: &TrainConfig,
    hook: EpochHook<'_>,
) -> Result<FitOutcome, TrainError> {
    fit_inner(h, features, bundle, val_negatives, cfg, NegativeSource::Heuristic(kind), hook)
}

fn fit_inner(
    h: &Hypergraph,
    features: &FeatureMatrix,
    bundle: &SplitBundle,
    val_negatives: &FrozenNegatives,
    cfg: &TrainConfig,
    source: NegativeSource,
    mut hook: EpochHook<'_>,
) -> Result<FitOutcome, TrainError> {
    cfg.profile.validate()?;
    if features.num_nodes() != h.num_nodes() {
        return Err(TrainError::ShapeMismatch(format!(
            "{} feature rows for {} nodes",
            features.num_nodes(),
            h.num_nodes()
        )));
    }

    let structure = structure_hypergraph(h, bundle);
    let agg = aggregation_operators(&structure, cfg.profile.alpha, cfg.profile.beta);
    let sizes = SizeDistribution::from_edges(&bundle.train)?;
    let observed: HashSet<NodeSet> = bundle
        .train
        .iter()
        .chain(&bundle.validation)
        .chain(&bundle.test)
        .cloned()
        .collect();
    let clique = clique_adjacency(&structure);
    let mut ctx = SamplerContext::new(
        &structure,
        &clique,
        &sizes,
        &observed,
        rng::stream(cfg.seed, "train-sampler"),
    );

    let mut state = init_model_state(
        &cfg.profile,
        features.matrix().cols(),
        h.num_nodes(),
        cfg.seed,
        cfg.memory_capacity,
    )?;
    let data = TrainData {
        agg: &agg,
        features: features.matrix(),
        positives: &bundle.train,
    };

    let evaluate = |state: &ModelState| {
        validation_aurocs(
            &cfg.profile,
            &state.disc,
            &agg,
            features.matrix(),
            &bundle.validation,
            val_negatives,
        )
    };

    let (val_auroc, val_auroc_avg) = evaluate(&state)?;
    let mut best = snapshot(&state, 0, val_auroc, val_auroc_avg);
    let mut records = vec![EpochRecord {
        epoch: 0,
        losses: LossReport::default(),
        val_auroc,
        val_auroc_avg,
    }];
    if let Some(hook) = hook.as_mut() {
        hook(&records[0], &state);
    }

    for epoch in 1..=cfg.max_epochs {
        let losses = match train_epoch_inner(&mut state, &data, &mut ctx, cfg, &source, epoch) {
            Ok(l) => l,
            Err(e) if e.is_divergence() => {
                return Err(TrainError::Diverged {
                    epoch,
                    detail: e.to_string(),
                    last_good: Box::new(best),
                })
            }
            Err(e) => return Err(e),
        };
        let (val_auroc, val_auroc_avg) = evaluate(&state)?;
        let record = EpochRecord {
            epoch,
            losses,
            val_auroc,
            val_auroc_avg,
        };
        if let Some(hook) = hook.as_mut() {
            hook(&record, &state);
        }
        records.push(record);
        if val_auroc_avg > best.val_auroc_avg {
            best = snapshot(&state, epoch, val_auroc, val_auroc_avg);
        }
    }

    Ok(FitOutcome {
        best,
        final_state: state,
        epochs: records,
    })
}

fn snapshot(state: &ModelState, epoch: usize, val_auroc: [f64; 4], avg: f64) -> Checkpoint {
    Checkpoint {
        disc: state.disc.snapshot(),
        gen: state.gen.snapshot(),
        epoch,
        val_auroc,
        val_auroc_avg: avg,
    }
}
