//! Adam with bias correction and optional global-norm gradient clipping.

use std::collections::BTreeMap;

use super::matrix::Matrix;
use super::{ParamStore, TensorError};

/// Per-parameter first and second moment estimates plus the shared
/// step counter. Moments are created lazily on the first step that
/// sees the parameter.
#[derive(Clone, Debug, Default)]
pub struct AdamState {
    pub step: u64,
    moments: BTreeMap<String, (Matrix, Matrix)>,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    /// One update over every parameter in the store. Every parameter
    /// must carry a gradient; a missing one indicates the loss didn't
    /// touch it, which is a wiring bug rather than a soft condition.
    ///
    /// `max_norm`, when set, rescales all gradients together so their
    /// concatenated L2 norm is at most that value. Gradients are
    /// cleared after the update.
    pub fn step(
        &mut self,
        params: &mut ParamStore,
        lr: f64,
        max_norm: Option<f64>,
    ) -> Result<(), TensorError> {
        for (name, t) in params.iter() {
            if t.grad.is_none() {
                return Err(TensorError::MissingGradient(name.clone()));
            }
        }

        let clip_factor = match max_norm {
            Some(limit) => {
                let total_sq: f64 = params
                    .iter()
                    .map(|(_, t)| t.grad.as_ref().unwrap().frobenius_sq())
                    .sum();
                let norm = total_sq.sqrt();
                if norm > limit {
                    limit / norm
                } else {
                    1.0
                }
            }
            None => 1.0,
        };

        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - ADAM_BETA1.powf(t);
        let bc2 = 1.0 - ADAM_BETA2.powf(t);

        for (name, tensor) in params.iter_mut() {
            let g = tensor.grad.as_ref().unwrap();
            let (rows, cols) = g.shape();
            let (m, v) = self
                .moments
                .entry(name.clone())
                .or_insert_with(|| (Matrix::zeros(rows, cols), Matrix::zeros(rows, cols)));
            for i in 0..rows * cols {
                let gi = g.data()[i] * clip_factor;
                let mi = ADAM_BETA1 * m.data()[i] + (1.0 - ADAM_BETA1) * gi;
                let vi = ADAM_BETA2 * v.data()[i] + (1.0 - ADAM_BETA2) * gi * gi;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                let m_hat = mi / bc1;
                let v_hat = vi / bc2;
                tensor.value.data_mut()[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
            if !tensor.value.all_finite() {
                return Err(TensorError::NonFinite { op: "adam_step" });
            }
        }

        params.clear_grads();
        Ok(())
    }

    /// Moment matrices by parameter name, for checkpointing.
    pub fn moments(&self) -> &BTreeMap<String, (Matrix, Matrix)> {
        &self.moments
    }

    pub fn restore(step: u64, moments: BTreeMap<String, (Matrix, Matrix)>) -> Self {
        Self { step, moments }
    }
}
