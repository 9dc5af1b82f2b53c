//! The six subcommands. Each is a pure function of its config: inputs
//! are never mutated and reruns with the same seed reproduce every
//! artifact byte for byte.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ahp_core::analysis::{compare, generate_negative_edges, measure, sampled_hypergraph};
use ahp_core::hypergraph::{
    load_features, load_hypergraph, serialize_features, serialize_hypergraph, split_hyperedges,
    structure_hypergraph, FeatureMatrix, Hypergraph, SizeDistribution,
};
use ahp_core::metrics::{auroc, average_precision, ScoredExamples};
use ahp_core::model::{aggregation_operators, score_node_sets};
use ahp_core::sampling::FrozenNegatives;
use ahp_core::synth::{planted_dataset, SynthParams};
use ahp_core::tensor::{load_checkpoint, save_checkpoint, AdamState, CheckpointData, ParamStore};
use ahp_core::train::{fit, freeze_split_negatives, heuristic_fit, EpochRecord, FitOutcome};

use crate::artifacts::{
    analysis_report_path, best_checkpoint_path, ensure_output_dir, epoch_log_path,
    eval_report_path, final_checkpoint_path, manifest_path, read_json, snapshot_path,
    snapshots_dir, sweep_report_path, write_json, AnalysisReport, AnalysisRow, EvalReport,
    Manifest, SchemeValues, SweepReport, SweepRun,
};
use crate::config::{hex, RunConfig};
use crate::CliError;

struct Dataset {
    h: Hypergraph,
    features: FeatureMatrix,
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let h = load_hypergraph(&cfg.hyperedges).map_err(|source| CliError::Hyperedges {
        path: cfg.hyperedges.clone(),
        source,
    })?;
    let features =
        load_features(&cfg.features, Some(h.num_nodes())).map_err(|source| CliError::Features {
            path: cfg.features.clone(),
            source,
        })?;
    Ok(Dataset { h, features })
}

fn read_manifest(cfg: &RunConfig, h: &Hypergraph) -> Result<Manifest, CliError> {
    let path = manifest_path(cfg);
    if !path.exists() {
        return Err(CliError::Invalid(format!(
            "manifest {} not found; run the split command first",
            path.display()
        )));
    }
    let manifest: Manifest = read_json(&path)?;
    let expected = cfg.hash_hex();
    if manifest.config_hash != expected {
        return Err(CliError::HashMismatch {
            artifact: "manifest",
            path,
            found: manifest.config_hash,
            expected,
        });
    }
    if manifest.num_nodes != h.num_nodes() || manifest.num_edges != h.num_edges() {
        return Err(CliError::Invalid(format!(
            "manifest {} describes {} nodes / {} edges but the dataset has {} / {}",
            path.display(),
            manifest.num_nodes,
            manifest.num_edges,
            h.num_nodes(),
            h.num_edges()
        )));
    }
    Ok(manifest)
}

fn load_checkpoint_for(cfg: &RunConfig, path: &Path) -> Result<CheckpointData, CliError> {
    let data = load_checkpoint(path).map_err(|source| CliError::Checkpoint {
        path: path.to_path_buf(),
        source,
    })?;
    let expected = cfg.hash_hex();
    let found = hex(&data.config_hash);
    if found != expected {
        return Err(CliError::HashMismatch {
            artifact: "checkpoint",
            path: path.to_path_buf(),
            found,
            expected,
        });
    }
    Ok(data)
}

pub fn split(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load_dataset(cfg)?;
    let bundle = split_hyperedges(&ds.h, cfg.seed)?;
    let (validation_negatives, test_negatives) =
        freeze_split_negatives(&ds.h, &bundle, cfg.seed)?;
    let manifest = Manifest {
        config_hash: cfg.hash_hex(),
        num_nodes: ds.h.num_nodes(),
        num_edges: ds.h.num_edges(),
        bundle,
        validation_negatives,
        test_negatives,
    };
    ensure_output_dir(cfg)?;
    let path = manifest_path(cfg);
    write_json(&path, &manifest)?;
    println!(
        "split: {} train / {} validation / {} test hyperedges",
        manifest.bundle.train.len(),
        manifest.bundle.validation.len(),
        manifest.bundle.test.len()
    );
    println!(
        "froze {} validation and {} test negatives per scheme",
        manifest.bundle.validation.len(),
        manifest.bundle.test.len()
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn auroc_metrics(val: [f64; 4], avg: f64) -> std::collections::BTreeMap<String, f64> {
    let mut m = std::collections::BTreeMap::new();
    for (name, v) in ["sns", "mns", "cns", "mixed"].iter().zip(val) {
        m.insert(format!("val_auroc_{name}"), v);
    }
    m.insert("val_auroc_avg".to_string(), avg);
    m
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load_dataset(cfg)?;
    let manifest = read_manifest(cfg, &ds.h)?;
    ensure_output_dir(cfg)?;

    let snapshot_epochs: BTreeSet<usize> = cfg.snapshot_epochs.iter().copied().collect();
    if !snapshot_epochs.is_empty() {
        fs::create_dir_all(snapshots_dir(cfg)).map_err(|source| CliError::Write {
            path: snapshots_dir(cfg),
            source,
        })?;
    }

    let log_path = epoch_log_path(cfg);
    let mut log = std::io::BufWriter::new(fs::File::create(&log_path).map_err(|source| {
        CliError::Write {
            path: log_path.clone(),
            source,
        }
    })?);

    let hash = cfg.hash();
    let config_json = cfg.canonical_json();
    // Hooks cannot return errors; remember the first write failure and
    // surface it once training finishes.
    let mut deferred: Option<CliError> = None;
    let mut hook = |record: &EpochRecord, state: &ahp_core::train::ModelState| {
        if deferred.is_some() {
            return;
        }
        let line = serde_json::to_string(record).expect("record serializes");
        if let Err(source) = writeln!(log, "{line}") {
            deferred = Some(CliError::Write {
                path: log_path.clone(),
                source,
            });
            return;
        }
        if snapshot_epochs.contains(&record.epoch) {
            let snapshot = CheckpointData {
                config_hash: hash,
                config_json: config_json.clone(),
                epoch: record.epoch as u64,
                metrics: auroc_metrics(record.val_auroc, record.val_auroc_avg),
                disc_params: state.disc.clone(),
                gen_params: state.gen.clone(),
                disc_adam: state.disc_adam.clone(),
                gen_adam: state.gen_adam.clone(),
            };
            let path = snapshot_path(cfg, record.epoch);
            if let Err(source) = save_checkpoint(&path, &snapshot) {
                deferred = Some(CliError::Checkpoint { path, source });
            }
        }
    };

    let tc = cfg.train_config();
    let outcome: FitOutcome = match cfg.negatives.sampler() {
        None => fit(
            &ds.h,
            &ds.features,
            &manifest.bundle,
            &manifest.validation_negatives,
            &tc,
            Some(&mut hook),
        )?,
        Some(kind) => heuristic_fit(
            &ds.h,
            &ds.features,
            &manifest.bundle,
            &manifest.validation_negatives,
            kind,
            &tc,
            Some(&mut hook),
        )?,
    };
    if let Some(err) = deferred {
        return Err(err);
    }
    log.flush().map_err(|source| CliError::Write {
        path: log_path.clone(),
        source,
    })?;

    let best = &outcome.best;
    let best_data = CheckpointData {
        config_hash: hash,
        config_json: config_json.clone(),
        epoch: best.epoch as u64,
        metrics: auroc_metrics(best.val_auroc, best.val_auroc_avg),
        disc_params: best.disc.clone(),
        gen_params: best.gen.clone(),
        // Optimizer state is not tracked per epoch; the final
        // checkpoint carries the resumable state.
        disc_adam: AdamState::default(),
        gen_adam: AdamState::default(),
    };
    let best_path = best_checkpoint_path(cfg);
    save_checkpoint(&best_path, &best_data).map_err(|source| CliError::Checkpoint {
        path: best_path.clone(),
        source,
    })?;

    let last = outcome.epochs.last().expect("at least the untrained epoch");
    let final_data = CheckpointData {
        config_hash: hash,
        config_json,
        epoch: last.epoch as u64,
        metrics: auroc_metrics(last.val_auroc, last.val_auroc_avg),
        disc_params: outcome.final_state.disc.clone(),
        gen_params: outcome.final_state.gen.clone(),
        disc_adam: outcome.final_state.disc_adam.clone(),
        gen_adam: outcome.final_state.gen_adam.clone(),
    };
    let final_path = final_checkpoint_path(cfg);
    save_checkpoint(&final_path, &final_data).map_err(|source| CliError::Checkpoint {
        path: final_path.clone(),
        source,
    })?;

    println!(
        "trained {} epochs; best avg validation auroc {:.4} at epoch {}",
        last.epoch, best.val_auroc_avg, best.epoch
    );
    println!("wrote {}", best_path.display());
    println!("wrote {}", final_path.display());
    println!("wrote {}", log_path.display());
    Ok(())
}

pub fn eval(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<(), CliError> {
    let ds = load_dataset(cfg)?;
    let manifest = read_manifest(cfg, &ds.h)?;
    let default_path = best_checkpoint_path(cfg);
    let ckpt_path = checkpoint.unwrap_or(&default_path);
    let data = load_checkpoint_for(cfg, ckpt_path)?;

    let structure = structure_hypergraph(&ds.h, &manifest.bundle);
    let agg = aggregation_operators(&structure, cfg.profile.alpha, cfg.profile.beta);
    let pos = score_node_sets(
        &cfg.profile,
        &data.disc_params,
        &agg,
        ds.features.matrix(),
        &manifest.bundle.test,
    )?;

    let mut aurocs = [0.0; 4];
    let mut aps = [0.0; 4];
    for (i, kind) in FrozenNegatives::KINDS.into_iter().enumerate() {
        let neg = score_node_sets(
            &cfg.profile,
            &data.disc_params,
            &agg,
            ds.features.matrix(),
            manifest.test_negatives.by_kind(kind),
        )?;
        let examples = ScoredExamples::from_parts(&pos, &neg)?;
        aurocs[i] = auroc(&examples)?;
        aps[i] = average_precision(&examples)?;
    }

    let report = EvalReport {
        config_hash: cfg.hash_hex(),
        checkpoint_epoch: data.epoch,
        test_positives: manifest.bundle.test.len(),
        auroc: SchemeValues::new(aurocs),
        average_precision: SchemeValues::new(aps),
    };
    ensure_output_dir(cfg)?;
    let path = eval_report_path(cfg);
    write_json(&path, &report)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    println!("wrote {}", path.display());
    Ok(())
}

pub fn analyze(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load_dataset(cfg)?;
    let snapshots = find_snapshots(cfg)?;

    let sizes = SizeDistribution::from_edges(ds.h.hyperedges())?;
    // mask_fraction is validated to be exactly 1/6; integer arithmetic
    // avoids a rounding disagreement with the resampler.
    let replaced = ds.h.num_edges().div_ceil(6);
    let original = measure(&ds.h);

    let mut rows = Vec::with_capacity(snapshots.len());
    for path in &snapshots {
        let data = load_checkpoint_for(cfg, path)?;
        let negatives =
            generate_negative_edges(&cfg.profile, &data.gen_params, &sizes, replaced, cfg.seed)?;
        let sampled = sampled_hypergraph(&ds.h, &negatives, cfg.seed)?;
        let d = compare(&original, &measure(&sampled))?;
        let row = AnalysisRow {
            epoch: data.epoch,
            node_degree: d.node_degree,
            pair_overlap: d.pair_overlap,
            intersection_size: d.intersection_size,
            mean: d.mean(),
        };
        println!(
            "epoch {}: node degree {:.4}, pair overlap {:.4}, intersection size {:.4}, mean {:.4}",
            row.epoch, row.node_degree, row.pair_overlap, row.intersection_size, row.mean
        );
        rows.push(row);
    }

    let report = AnalysisReport {
        config_hash: cfg.hash_hex(),
        replaced_edges: replaced,
        rows,
    };
    let path = analysis_report_path(cfg);
    write_json(&path, &report)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Snapshot files under the output directory, ordered by epoch.
fn find_snapshots(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = snapshots_dir(cfg);
    let missing = || {
        CliError::Invalid(format!(
            "no snapshots under {}; set snapshot_epochs and rerun train",
            dir.display()
        ))
    };
    let entries = fs::read_dir(&dir).map_err(|_| missing())?;
    let mut found: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| CliError::Read {
            path: dir.clone(),
            source,
        })?;
        let name = entry.file_name();
        let Some(epoch) = name
            .to_str()
            .and_then(|n| n.strip_prefix("epoch_"))
            .and_then(|n| n.strip_suffix(".ckpt"))
            .and_then(|n| n.parse::<usize>().ok())
        else {
            continue;
        };
        found.push((epoch, entry.path()));
    }
    if found.is_empty() {
        return Err(missing());
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

pub struct SynthRequest {
    pub params: SynthParams,
    pub hyperedges: PathBuf,
    pub features: PathBuf,
}

pub fn synth(req: &SynthRequest) -> Result<(), CliError> {
    let (h, features) = planted_dataset(&req.params)?;
    for (path, body) in [
        (&req.hyperedges, serialize_hypergraph(&h)),
        (&req.features, serialize_features(&features)),
    ] {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|source| CliError::Write {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(path, body).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
    }
    println!(
        "wrote {} hyperedges over {} nodes to {} (features: {})",
        h.num_edges(),
        h.num_nodes(),
        req.hyperedges.display(),
        req.features.display()
    );
    Ok(())
}

pub fn sweep(base: &RunConfig, runs: usize) -> Result<(), CliError> {
    if runs == 0 {
        return Err(CliError::Invalid("sweep needs at least one run".to_string()));
    }
    let mut reports: Vec<SweepRun> = Vec::with_capacity(runs);
    for k in 0..runs as u64 {
        let mut cfg = base.clone();
        cfg.seed = base.seed + k;
        cfg.output_dir = base.output_dir.join(format!("seed-{}", cfg.seed));
        println!("-- seed {} --", cfg.seed);
        split(&cfg)?;
        train(&cfg)?;
        eval(&cfg, None)?;
        let report: EvalReport = read_json(&eval_report_path(&cfg))?;
        reports.push(SweepRun {
            seed: cfg.seed,
            config_hash: report.config_hash,
            auroc: report.auroc,
            average_precision: report.average_precision,
        });
    }

    let auroc = aggregate(&reports, |r| r.auroc);
    let ap = aggregate(&reports, |r| r.average_precision);
    let report = SweepReport {
        base_config_hash: base.hash_hex(),
        runs: reports,
        auroc_mean: auroc.0,
        auroc_std: auroc.1,
        average_precision_mean: ap.0,
        average_precision_std: ap.1,
    };
    ensure_output_dir(base)?;
    let path = sweep_report_path(base);
    write_json(&path, &report)?;
    println!(
        "sweep over {} seeds: avg test auroc {:.4} +/- {:.4}",
        runs, report.auroc_mean.avg, report.auroc_std.avg
    );
    println!("wrote {}", path.display());
    Ok(())
}

/// Field-wise mean and sample standard deviation (0 for one run).
fn aggregate(
    runs: &[SweepRun],
    pick: impl Fn(&SweepRun) -> SchemeValues,
) -> (SchemeValues, SchemeValues) {
    let stat = |get: &dyn Fn(&SchemeValues) -> f64| -> (f64, f64) {
        let values: Vec<f64> = runs.iter().map(|r| get(&pick(r))).collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        (mean, std)
    };
    let sns = stat(&|v| v.sns);
    let mns = stat(&|v| v.mns);
    let cns = stat(&|v| v.cns);
    let mixed = stat(&|v| v.mixed);
    let avg = stat(&|v| v.avg);
    (
        SchemeValues {
            sns: sns.0,
            mns: mns.0,
            cns: cns.0,
            mixed: mixed.0,
            avg: avg.0,
        },
        SchemeValues {
            sns: sns.1,
            mns: mns.1,
            cns: cns.1,
            mixed: mixed.1,
            avg: avg.1,
        },
    )
}
