//! Minimal dense/sparse tensor operations with reverse-mode
//! differentiation and an Adam optimizer.
//!
//! Values are 64-bit floats throughout. A [`Tape`] records primitive
//! operations during a forward pass; [`Tape::backward`] walks the
//! record in reverse and accumulates gradients into the [`ParamStore`]
//! entries the tape's leaves were bound to.

mod adam;
mod checkpoint;
mod matrix;
mod sparse;
mod tape;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointData, CheckpointError};
pub use matrix::Matrix;
pub use sparse::SparseMatrix;
pub use tape::{Tape, TensorRef};

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch ({detail})")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("{op}: produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("backward: loss must be 1x1, got {rows}x{cols}")]
    NotScalar { rows: usize, cols: usize },
    #[error("backward: loss does not depend on any trainable tensor")]
    DisconnectedLoss,
    #[error("backward: tape already consumed; run a new forward pass first")]
    TapeConsumed,
    #[error("{op}: index {index} out of range for bound {bound}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("parameter {0:?} registered twice")]
    DuplicateParam(String),
    #[error("unknown parameter {0:?}")]
    UnknownParam(String),
    #[error("parameter {0:?} has no gradient; run backward before stepping")]
    MissingGradient(String),
}

/// A named value with an optional accumulated gradient.
#[derive(Clone, Debug)]
pub struct Tensor {
    pub value: Matrix,
    pub grad: Option<Matrix>,
    pub requires_grad: bool,
}

impl Tensor {
    pub fn new(value: Matrix) -> Self {
        Self {
            value,
            grad: None,
            requires_grad: true,
        }
    }
}

/// Registry of learnable parameters, keyed by unique name.
///
/// Iteration order is the name order, which keeps whole-store
/// reductions (global norm clipping, checkpoint layout) deterministic.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    params: BTreeMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, value: Matrix) -> Result<(), TensorError> {
        if self.params.contains_key(name) {
            return Err(TensorError::DuplicateParam(name.to_string()));
        }
        self.params.insert(name.to_string(), Tensor::new(value));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    pub fn value(&self, name: &str) -> Result<&Matrix, TensorError> {
        self.params
            .get(name)
            .map(|t| &t.value)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn value_mut(&mut self, name: &str) -> Result<&mut Matrix, TensorError> {
        self.params
            .get_mut(name)
            .map(|t| &mut t.value)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn accumulate_grad(&mut self, name: &str, delta: &Matrix) -> Result<(), TensorError> {
        let t = self
            .params
            .get_mut(name)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))?;
        match &mut t.grad {
            Some(g) => g.add_assign(delta),
            None => t.grad = Some(delta.clone()),
        }
        Ok(())
    }

    pub fn clear_grads(&mut self) {
        for t in self.params.values_mut() {
            t.grad = None;
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.params.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }

    /// Copy of the parameter values without gradients.
    pub fn snapshot(&self) -> ParamStore {
        let mut out = ParamStore::new();
        for (name, t) in &self.params {
            out.params.insert(name.clone(), Tensor::new(t.value.clone()));
        }
        out
    }
}
