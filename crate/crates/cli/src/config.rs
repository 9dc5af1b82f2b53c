//! Run configuration: a versioned JSON schema whose canonical
//! serialization is hashed into every artifact a run writes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ahp_core::model::ModelProfile;
use ahp_core::sampling::SamplerKind;
use ahp_core::train::TrainConfig;

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// Protocol constants; configs must restate them and are rejected on
/// any other value, so a file can never silently change the protocol.
pub const SPLIT_PROPORTIONS: [f64; 3] = [0.6, 0.2, 0.2];
pub const MASK_FRACTION: f64 = 1.0 / 6.0;

/// Supported learning-rate range (covers the tuning grids).
const LR_RANGE: (f64, f64) = (1e-8, 1e-1);

/// Where training negatives come from: the adversarial generator or
/// one of the fixed sampling schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeSource {
    Generator,
    Sns,
    Mns,
    Cns,
    Mixed,
}

impl NegativeSource {
    pub fn sampler(self) -> Option<SamplerKind> {
        match self {
            NegativeSource::Generator => None,
            NegativeSource::Sns => Some(SamplerKind::Sns),
            NegativeSource::Mns => Some(SamplerKind::Mns),
            NegativeSource::Cns => Some(SamplerKind::Cns),
            NegativeSource::Mixed => Some(SamplerKind::Mixed),
        }
    }
}

/// One experiment, fully specified. Unknown keys are hard errors so
/// typos cannot silently fall back to defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Schema version; anything but the current version is rejected.
    pub version: u32,
    pub hyperedges: PathBuf,
    pub features: PathBuf,
    pub output_dir: PathBuf,
    /// Drives the split, the frozen negatives, training, and analysis.
    pub seed: u64,
    /// Train/validation/test proportions; the protocol fixes 0.6/0.2/0.2.
    pub split: [f64; 3],
    /// Fraction of hyperedges replaced when building sampled
    /// hypergraphs during analysis; the protocol fixes 1/6.
    pub mask_fraction: f64,
    pub negatives: NegativeSource,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub disc_lr: f64,
    pub gen_lr: f64,
    pub memory_capacity: usize,
    /// Global gradient-norm ceiling; null disables clipping.
    pub clip: Option<f64>,
    pub profile: ModelProfile,
    /// Epochs at which train writes full model snapshots for analyze.
    #[serde(default)]
    pub snapshot_epochs: Vec<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &'static str, message: String| {
            Err(CliError::Config { field, message })
        };
        if self.version != CONFIG_VERSION {
            return fail(
                "version",
                format!("unsupported schema version {}; this build reads {CONFIG_VERSION}", self.version),
            );
        }
        if self.split != SPLIT_PROPORTIONS {
            return fail(
                "split",
                format!("must be {SPLIT_PROPORTIONS:?} (fixed by the protocol), got {:?}", self.split),
            );
        }
        if (self.mask_fraction - MASK_FRACTION).abs() > 1e-12 {
            return fail(
                "mask_fraction",
                format!("must be 1/6 (fixed by the protocol), got {}", self.mask_fraction),
            );
        }
        if self.batch_size == 0 {
            return fail("batch_size", "must be positive".to_string());
        }
        if self.max_epochs > 100_000 {
            return fail("max_epochs", format!("{} exceeds the supported 100000", self.max_epochs));
        }
        for (field, lr) in [("disc_lr", self.disc_lr), ("gen_lr", self.gen_lr)] {
            if !(lr >= LR_RANGE.0 && lr <= LR_RANGE.1) {
                return fail(field, format!("{lr} outside the supported range [{:e}, {:e}]", LR_RANGE.0, LR_RANGE.1));
            }
        }
        if self.memory_capacity > 65_536 {
            return fail("memory_capacity", format!("{} exceeds the supported 65536", self.memory_capacity));
        }
        if let Some(c) = self.clip {
            if !(c.is_finite() && c > 0.0) {
                return fail("clip", format!("{c} is not a positive finite ceiling"));
            }
        }
        self.profile.validate()?;
        let mut prev: Option<usize> = None;
        for &e in &self.snapshot_epochs {
            if e > self.max_epochs {
                return fail("snapshot_epochs", format!("epoch {e} is beyond max_epochs {}", self.max_epochs));
            }
            if prev.is_some_and(|p| p >= e) {
                return fail("snapshot_epochs", "epochs must be strictly increasing".to_string());
            }
            prev = Some(e);
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            disc_lr: self.disc_lr,
            gen_lr: self.gen_lr,
            memory_capacity: self.memory_capacity,
            seed: self.seed,
            clip: self.clip,
            profile: self.profile,
        }
    }

    /// Canonical identity: compact JSON with the schema's field order.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.canonical_json().as_bytes()).into()
    }

    pub fn hash_hex(&self) -> String {
        hex(&self.hash())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|source| CliError::ConfigParse {
        path: path.to_path_buf(),
        source,
    })?;
    cfg.validate()?;
    Ok(cfg)
}
