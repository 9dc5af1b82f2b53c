//! Hyperedge and feature file parsing.
//!
//! Hyperedge files are UTF-8 text: one hyperedge per line as
//! whitespace-separated non-negative integer node ids. Lines starting
//! with '#' are comments; the special comment `#nodes N` pins the node
//! count (otherwise it is 1 + the largest id seen). Feature files
//! start with a `num_nodes d` header followed by either dense rows of
//! d values or sparse `i j value` triplets; a file whose first data
//! line has exactly d tokens is read as dense, so for d = 3 the dense
//! reading wins.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::tensor::Matrix;

use super::{FeatureMatrix, Hypergraph, HypergraphError, NodeSet};

pub fn load_hypergraph(path: &Path) -> Result<Hypergraph, HypergraphError> {
    parse_hypergraph(&fs::read_to_string(path)?)
}

pub fn parse_hypergraph(text: &str) -> Result<Hypergraph, HypergraphError> {
    let mut edges = Vec::new();
    let mut declared_nodes: Option<usize> = None;
    let mut max_id = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(n) = comment.strip_prefix("nodes") {
                declared_nodes = Some(n.trim().parse().map_err(|_| malformed(
                    lineno,
                    format!("bad node count in {line:?}"),
                ))?);
            }
            continue;
        }
        let mut nodes = Vec::new();
        for tok in line.split_whitespace() {
            let id: usize = tok
                .parse()
                .map_err(|_| malformed(lineno, format!("bad node id {tok:?}")))?;
            nodes.push(id);
        }
        let set = NodeSet::new(nodes)
            .map_err(|_| malformed(lineno, "empty hyperedge".to_string()))?;
        if set.len() < 2 {
            return Err(malformed(
                lineno,
                format!("hyperedge has {} distinct nodes; need at least 2", set.len()),
            ));
        }
        max_id = Some(max_id.unwrap_or(0).max(set.max_node()));
        edges.push(set);
    }

    let inferred = max_id.map_or(0, |m| m + 1);
    let num_nodes = declared_nodes.unwrap_or(inferred);
    Hypergraph::new(num_nodes, edges)
}

/// Canonical text form: a `#nodes` header, then one line per
/// hyperedge. Parsing the output and serializing again reproduces the
/// bytes exactly.
pub fn serialize_hypergraph(h: &Hypergraph) -> String {
    let mut out = format!("#nodes {}\n", h.num_nodes());
    for e in h.hyperedges() {
        let ids: Vec<String> = e.iter().map(|v| v.to_string()).collect();
        out.push_str(&ids.join(" "));
        out.push('\n');
    }
    out
}

/// Dense text form of a feature matrix: a `rows cols` header, then one
/// row per node. f64 Display round-trips exactly through parsing.
pub fn serialize_features(features: &FeatureMatrix) -> String {
    let m = features.matrix();
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Variant for files whose node names are arbitrary labels. Labels map
/// to dense ids in order of first appearance; the returned vector is
/// the id → label table to persist alongside the graph.
pub fn load_labeled_hypergraph(path: &Path) -> Result<(Hypergraph, Vec<String>), HypergraphError> {
    parse_labeled_hypergraph(&fs::read_to_string(path)?)
}

pub fn parse_labeled_hypergraph(text: &str) -> Result<(Hypergraph, Vec<String>), HypergraphError> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut nodes = Vec::new();
        for tok in line.split_whitespace() {
            let id = *ids.entry(tok.to_string()).or_insert_with(|| {
                labels.push(tok.to_string());
                labels.len() - 1
            });
            nodes.push(id);
        }
        let set = NodeSet::new(nodes)
            .map_err(|_| malformed(lineno, "empty hyperedge".to_string()))?;
        if set.len() < 2 {
            return Err(malformed(
                lineno,
                format!("hyperedge has {} distinct nodes; need at least 2", set.len()),
            ));
        }
        edges.push(set);
    }

    let h = Hypergraph::new(labels.len(), edges)?;
    Ok((h, labels))
}

pub fn load_features(
    path: &Path,
    expected_nodes: Option<usize>,
) -> Result<FeatureMatrix, HypergraphError> {
    parse_features(&fs::read_to_string(path)?, expected_nodes)
}

pub fn parse_features(
    text: &str,
    expected_nodes: Option<usize>,
) -> Result<FeatureMatrix, HypergraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(no, l)| (no, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hno, header) = lines
        .next()
        .ok_or_else(|| bad_features("missing header".to_string()))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(malformed(hno, format!("header must be \"num_nodes d\", got {header:?}")));
    }
    let num_nodes: usize = toks[0]
        .parse()
        .map_err(|_| malformed(hno, format!("bad node count {:?}", toks[0])))?;
    let dim: usize = toks[1]
        .parse()
        .map_err(|_| malformed(hno, format!("bad dimension {:?}", toks[1])))?;
    if let Some(n) = expected_nodes {
        if n != num_nodes {
            return Err(bad_features(format!(
                "file declares {num_nodes} nodes but the hypergraph has {n}"
            )));
        }
    }

    let body: Vec<(usize, &str)> = lines.collect();
    let dense = match body.first() {
        Some((_, first)) => {
            let n = first.split_whitespace().count();
            if n == dim {
                true
            } else if n == 3 {
                false
            } else {
                return Err(malformed(
                    body[0].0,
                    format!("expected {dim} values (dense) or 3 (sparse), got {n}"),
                ));
            }
        }
        None => true,
    };

    let mut m = Matrix::zeros(num_nodes, dim);
    if dense {
        if body.len() != num_nodes {
            return Err(bad_features(format!(
                "dense body has {} rows for {num_nodes} nodes",
                body.len()
            )));
        }
        for (row, (lineno, line)) in body.iter().enumerate() {
            let mut col = 0;
            for tok in line.split_whitespace() {
                if col >= dim {
                    return Err(malformed(*lineno, format!("more than {dim} values")));
                }
                m.set(row, col, parse_value(*lineno, tok)?);
                col += 1;
            }
            if col != dim {
                return Err(malformed(*lineno, format!("expected {dim} values, got {col}")));
            }
        }
    } else {
        for (lineno, line) in body {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(malformed(lineno, format!("expected \"i j value\", got {line:?}")));
            }
            let i: usize = toks[0]
                .parse()
                .map_err(|_| malformed(lineno, format!("bad row index {:?}", toks[0])))?;
            let j: usize = toks[1]
                .parse()
                .map_err(|_| malformed(lineno, format!("bad column index {:?}", toks[1])))?;
            if i >= num_nodes || j >= dim {
                return Err(malformed(lineno, format!("entry ({i}, {j}) outside {num_nodes}x{dim}")));
            }
            m.set(i, j, parse_value(lineno, toks[2])?);
        }
    }

    FeatureMatrix::new(m)
}

fn parse_value(lineno: usize, tok: &str) -> Result<f64, HypergraphError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| malformed(lineno, format!("bad value {tok:?}")))?;
    if !v.is_finite() {
        return Err(malformed(lineno, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

fn malformed(lineno: usize, detail: String) -> HypergraphError {
    HypergraphError::Malformed { line: lineno + 1, detail }
}

fn bad_features(detail: String) -> HypergraphError {
    HypergraphError::BadFeatures(detail)
}
