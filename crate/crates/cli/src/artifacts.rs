//! Artifact layout and report schemas. Every file a run writes lives
//! under the config's output directory and embeds the config hash;
//! readers refuse files whose hash differs from the current config.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use ahp_core::hypergraph::SplitBundle;
use ahp_core::sampling::FrozenNegatives;

use crate::config::RunConfig;
use crate::CliError;

pub fn manifest_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("manifest.json")
}

pub fn best_checkpoint_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("checkpoint_best.ckpt")
}

pub fn final_checkpoint_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("checkpoint_final.ckpt")
}

pub fn epoch_log_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("epochs.jsonl")
}

pub fn snapshots_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("snapshots")
}

pub fn snapshot_path(cfg: &RunConfig, epoch: usize) -> PathBuf {
    snapshots_dir(cfg).join(format!("epoch_{epoch}.ckpt"))
}

pub fn eval_report_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("eval_report.json")
}

pub fn analysis_report_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("analysis_report.json")
}

pub fn sweep_report_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("sweep_report.json")
}

/// Split output: the partition plus the frozen negative sets, one per
/// scheme, for validation and test.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config_hash: String,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub bundle: SplitBundle,
    pub validation_negatives: FrozenNegatives,
    pub test_negatives: FrozenNegatives,
}

/// Per-scheme metric values plus their arithmetic mean.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeValues {
    pub sns: f64,
    pub mns: f64,
    pub cns: f64,
    pub mixed: f64,
    pub avg: f64,
}

impl SchemeValues {
    pub fn new(values: [f64; 4]) -> Self {
        SchemeValues {
            sns: values[0],
            mns: values[1],
            cns: values[2],
            mixed: values[3],
            avg: values.iter().sum::<f64>() / 4.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub config_hash: String,
    pub checkpoint_epoch: u64,
    pub test_positives: usize,
    pub auroc: SchemeValues,
    pub average_precision: SchemeValues,
}

/// D-statistics for one generator snapshot: the sampled hypergraph's
/// distributions against the original's.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisRow {
    pub epoch: u64,
    pub node_degree: f64,
    pub pair_overlap: f64,
    pub intersection_size: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub config_hash: String,
    pub replaced_edges: usize,
    pub rows: Vec<AnalysisRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRun {
    pub seed: u64,
    pub config_hash: String,
    pub auroc: SchemeValues,
    pub average_precision: SchemeValues,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepReport {
    pub base_config_hash: String,
    pub runs: Vec<SweepRun>,
    pub auroc_mean: SchemeValues,
    pub auroc_std: SchemeValues,
    pub average_precision_mean: SchemeValues,
    pub average_precision_std: SchemeValues,
}

pub fn ensure_output_dir(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.output_dir).map_err(|source| CliError::Write {
        path: cfg.output_dir.clone(),
        source,
    })
}

/// Pretty JSON with a trailing newline; serialization is deterministic,
/// so identical values produce identical bytes.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, body + "\n").map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::ArtifactParse {
        path: path.to_path_buf(),
        source,
    })
}
