//! Versioned binary checkpoint container.
//!
//! Layout (all integers u64 little-endian, all floats f64 little-endian):
//!
//! ```text
//! magic           8 bytes  "AHPCKPT\n"
//! version         u64      currently 1
//! config_hash     32 bytes (sha-256 of the canonical run config)
//! config_json     str      (u64 byte length + utf-8 bytes)
//! epoch           u64
//! metrics         u64 count, then per entry: name str, value f64
//! disc params     param-block
//! gen params      param-block
//! disc optimizer  adam-block
//! gen optimizer   adam-block
//!
//! param-block: u64 count, then per parameter (name-sorted):
//!   name str, rows u64, cols u64, rows*cols f64 values (row-major)
//! adam-block: step u64, u64 count, then per parameter (name-sorted):
//!   name str, rows u64, cols u64, first-moment f64s, second-moment f64s
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::adam::AdamState;
use super::matrix::Matrix;
use super::ParamStore;

const MAGIC: &[u8; 8] = b"AHPCKPT\n";
const VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u64),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

/// Everything needed to resume or evaluate a run.
#[derive(Clone, Debug, Default)]
pub struct CheckpointData {
    pub config_hash: [u8; 32],
    pub config_json: String,
    pub epoch: u64,
    pub metrics: BTreeMap<String, f64>,
    pub disc_params: ParamStore,
    pub gen_params: ParamStore,
    pub disc_adam: AdamState,
    pub gen_adam: AdamState,
}

pub fn save_checkpoint(path: &Path, data: &CheckpointData) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    write_u64(&mut w, VERSION)?;
    w.write_all(&data.config_hash)?;
    write_str(&mut w, &data.config_json)?;
    write_u64(&mut w, data.epoch)?;

    write_u64(&mut w, data.metrics.len() as u64)?;
    for (name, value) in &data.metrics {
        write_str(&mut w, name)?;
        write_f64(&mut w, *value)?;
    }

    write_params(&mut w, &data.disc_params)?;
    write_params(&mut w, &data.gen_params)?;
    write_adam(&mut w, &data.disc_adam)?;
    write_adam(&mut w, &data.gen_adam)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<CheckpointData, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u64(&mut r)?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let mut config_hash = [0u8; 32];
    r.read_exact(&mut config_hash)?;
    let config_json = read_str(&mut r)?;
    let epoch = read_u64(&mut r)?;

    let n_metrics = read_u64(&mut r)? as usize;
    let mut metrics = BTreeMap::new();
    for _ in 0..n_metrics {
        let name = read_str(&mut r)?;
        let value = read_f64(&mut r)?;
        metrics.insert(name, value);
    }

    let disc_params = read_params(&mut r)?;
    let gen_params = read_params(&mut r)?;
    let disc_adam = read_adam(&mut r)?;
    let gen_adam = read_adam(&mut r)?;

    Ok(CheckpointData {
        config_hash,
        config_json,
        epoch,
        metrics,
        disc_params,
        gen_params,
        disc_adam,
        gen_adam,
    })
}

fn write_params<W: Write>(w: &mut W, store: &ParamStore) -> Result<(), CheckpointError> {
    write_u64(w, store.len() as u64)?;
    for (name, tensor) in store.iter() {
        write_str(w, name)?;
        write_matrix(w, &tensor.value)?;
    }
    Ok(())
}

fn read_params<R: Read>(r: &mut R) -> Result<ParamStore, CheckpointError> {
    let n = read_u64(r)? as usize;
    let mut store = ParamStore::new();
    for _ in 0..n {
        let name = read_str(r)?;
        let m = read_matrix(r)?;
        store
            .register(&name, m)
            .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    }
    Ok(store)
}

fn write_adam<W: Write>(w: &mut W, adam: &AdamState) -> Result<(), CheckpointError> {
    write_u64(w, adam.step)?;
    write_u64(w, adam.moments().len() as u64)?;
    for (name, (m, v)) in adam.moments() {
        write_str(w, name)?;
        write_u64(w, m.rows() as u64)?;
        write_u64(w, m.cols() as u64)?;
        for &x in m.data() {
            write_f64(w, x)?;
        }
        for &x in v.data() {
            write_f64(w, x)?;
        }
    }
    Ok(())
}

fn read_adam<R: Read>(r: &mut R) -> Result<AdamState, CheckpointError> {
    let step = read_u64(r)?;
    let n = read_u64(r)? as usize;
    let mut moments = BTreeMap::new();
    for _ in 0..n {
        let name = read_str(r)?;
        let rows = checked_dim(read_u64(r)?)?;
        let cols = checked_dim(read_u64(r)?)?;
        let m = read_matrix_body(r, rows, cols)?;
        let v = read_matrix_body(r, rows, cols)?;
        moments.insert(name, (m, v));
    }
    Ok(AdamState::restore(step, moments))
}

fn write_matrix<W: Write>(w: &mut W, m: &Matrix) -> Result<(), CheckpointError> {
    write_u64(w, m.rows() as u64)?;
    write_u64(w, m.cols() as u64)?;
    for &x in m.data() {
        write_f64(w, x)?;
    }
    Ok(())
}

fn read_matrix<R: Read>(r: &mut R) -> Result<Matrix, CheckpointError> {
    let rows = checked_dim(read_u64(r)?)?;
    let cols = checked_dim(read_u64(r)?)?;
    read_matrix_body(r, rows, cols)
}

fn read_matrix_body<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<Matrix, CheckpointError> {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows * cols {
        m.data_mut()[i] = read_f64(r)?;
    }
    Ok(m)
}

// Dimension sanity bound: rejects garbage lengths before a huge
// allocation is attempted on a corrupt file.
fn checked_dim(v: u64) -> Result<usize, CheckpointError> {
    if v > 1 << 32 {
        return Err(CheckpointError::Corrupt(format!("dimension {v} out of range")));
    }
    Ok(v as usize)
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn write_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    write_u64(w, s.len() as u64)?;
    w.write_all(s.as_bytes())
}

fn read_str<R: Read>(r: &mut R) -> Result<String, CheckpointError> {
    let len = read_u64(r)? as usize;
    if len > 1 << 32 {
        return Err(CheckpointError::Corrupt(format!("string length {len} out of range")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| CheckpointError::Corrupt("non-utf8 string".to_string()))
}
