//! Set pooling: elementwise max − min over a set's embedding rows,
//! plus the gated variant that carries gradient to generator logits.

use crate::hypergraph::NodeSet;
use crate::tensor::{Matrix, Tape, TensorRef};

use super::ModelError;

/// Plain maxmin over the set's rows. 1 × emb.
pub fn pool_maxmin_on_tape(
    tape: &mut Tape,
    embeddings: TensorRef,
    s: &NodeSet,
) -> Result<TensorRef, ModelError> {
    let rows = tape.gather_rows(embeddings, s.nodes())?;
    let hi = tape.max_over_rows(rows)?;
    let lo = tape.min_over_rows(rows)?;
    Ok(tape.sub(hi, lo)?)
}

/// Maxmin over the set's rows after scaling row v by
/// sigmoid(logits[logit_row, v]). `logit_row` indexes the generated
/// batch the set came from.
pub fn gated_pool_on_tape(
    tape: &mut Tape,
    embeddings: TensorRef,
    logits: TensorRef,
    logit_row: usize,
    s: &NodeSet,
) -> Result<TensorRef, ModelError> {
    let rows = tape.gather_rows(embeddings, s.nodes())?;
    let entries: Vec<(usize, usize)> = s.iter().map(|v| (logit_row, v)).collect();
    let raw = tape.gather_entries(logits, &entries)?;
    let gates = tape.sigmoid(raw)?;
    let gated = tape.scale_rows(rows, gates)?;
    let hi = tape.max_over_rows(gated)?;
    let lo = tape.min_over_rows(gated)?;
    Ok(tape.sub(hi, lo)?)
}

/// Tape-free maxmin for direct evaluation.
pub fn pool_maxmin(embeddings: &Matrix, s: &NodeSet) -> Result<Vec<f64>, ModelError> {
    check_ids(embeddings, s)?;
    let first = embeddings.row(s.nodes()[0]);
    let mut hi = first.to_vec();
    let mut lo = first.to_vec();
    for v in s.iter().skip(1) {
        for (j, &x) in embeddings.row(v).iter().enumerate() {
            hi[j] = hi[j].max(x);
            lo[j] = lo[j].min(x);
        }
    }
    Ok(hi.iter().zip(&lo).map(|(h, l)| h - l).collect())
}

/// Tape-free gated maxmin: row v scaled by sigmoid(logits[v]) first.
pub fn gated_pool(
    embeddings: &Matrix,
    logits: &[f64],
    s: &NodeSet,
) -> Result<Vec<f64>, ModelError> {
    check_ids(embeddings, s)?;
    if logits.len() != embeddings.rows() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} logits for {} embedding rows",
            logits.len(),
            embeddings.rows()
        )));
    }
    let emb = embeddings.cols();
    let mut hi = vec![f64::NEG_INFINITY; emb];
    let mut lo = vec![f64::INFINITY; emb];
    for v in s.iter() {
        let gate = 1.0 / (1.0 + (-logits[v]).exp());
        for (j, &x) in embeddings.row(v).iter().enumerate() {
            let g = gate * x;
            hi[j] = hi[j].max(g);
            lo[j] = lo[j].min(g);
        }
    }
    Ok(hi.iter().zip(&lo).map(|(h, l)| h - l).collect())
}

fn check_ids(embeddings: &Matrix, s: &NodeSet) -> Result<(), ModelError> {
    if s.max_node() >= embeddings.rows() {
        return Err(ModelError::NodeOutOfRange {
            node: s.max_node(),
            rows: embeddings.rows(),
        });
    }
    Ok(())
}
