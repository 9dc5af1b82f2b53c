//! The computation tape: primitive forward ops and the reverse sweep.
//!
//! Every op pushes one node holding the result value and, when any
//! input requires a gradient, enough information to replay the op
//! backward. Node ids are creation-ordered, so reverse id order is a
//! valid reverse-topological order. A tape is single-use: `backward`
//! clears it, and a second backward on the same tape is an error.

use std::rc::Rc;

use super::matrix::Matrix;
use super::sparse::SparseMatrix;
use super::{ParamStore, TensorError};

/// Handle to a value on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TensorRef(usize);

enum Op {
    Leaf,
    MatMul(usize, usize),
    SpMm { m: Rc<SparseMatrix>, x: usize },
    AddBiasRow(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Relu(usize),
    LeakyRelu(usize, f64),
    Sigmoid(usize),
    GatherRows(usize, Vec<usize>),
    GatherEntries(usize, Vec<(usize, usize)>),
    Scale(usize, f64),
    ScaleRows(usize, usize),
    MaxOverRows(usize),
    MinOverRows(usize),
    Mean(usize),
    Sum(usize),
    Neg(usize),
    ConcatRows(Vec<usize>),
}

struct Node {
    op: Op,
    value: Matrix,
    requires_grad: bool,
    param: Option<String>,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, t: TensorRef) -> &Matrix {
        &self.nodes[t.0].value
    }

    pub fn shape(&self, t: TensorRef) -> (usize, usize) {
        self.nodes[t.0].value.shape()
    }

    /// A constant input; never receives gradient.
    pub fn constant(&mut self, value: Matrix) -> TensorRef {
        self.push_unchecked(Op::Leaf, value, false, None)
    }

    /// A leaf bound to a named parameter. Backward accumulates into the
    /// store entry of the same name.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<TensorRef, TensorError> {
        let t = store
            .get(name)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))?;
        Ok(self.push_unchecked(
            Op::Leaf,
            t.value.clone(),
            t.requires_grad,
            Some(name.to_string()),
        ))
    }

    /// A parameter value injected as a constant: used to evaluate one
    /// model while another is being trained against it.
    pub fn frozen(&mut self, store: &ParamStore, name: &str) -> Result<TensorRef, TensorError> {
        let t = store
            .get(name)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))?;
        Ok(self.push_unchecked(Op::Leaf, t.value.clone(), false, None))
    }

    pub fn matmul(&mut self, a: TensorRef, b: TensorRef) -> Result<TensorRef, TensorError> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ac != br {
            return Err(shape("matmul", format!("{ar}x{ac} by {br}x{bc}")));
        }
        let value = self.val(a).matmul(self.val(b));
        self.push(Op::MatMul(a.0, b.0), value, self.needs(&[a, b]), "matmul")
    }

    pub fn spmm(&mut self, m: &Rc<SparseMatrix>, x: TensorRef) -> Result<TensorRef, TensorError> {
        let (xr, xc) = self.shape(x);
        if m.cols() != xr {
            return Err(shape(
                "spmm",
                format!("{}x{} by {xr}x{xc}", m.rows(), m.cols()),
            ));
        }
        let value = m.matmul_dense(self.val(x));
        self.push(
            Op::SpMm {
                m: Rc::clone(m),
                x: x.0,
            },
            value,
            self.needs(&[x]),
            "spmm",
        )
    }

    /// x (m×n) + bias (1×n), broadcast over rows.
    pub fn add_bias_row(&mut self, x: TensorRef, bias: TensorRef) -> Result<TensorRef, TensorError> {
        let (_, xc) = self.shape(x);
        let (br, bc) = self.shape(bias);
        if br != 1 || bc != xc {
            return Err(shape("add_bias_row", format!("bias {br}x{bc} for {xc} cols")));
        }
        let b = self.val(bias).clone();
        let mut value = self.val(x).clone();
        for i in 0..value.rows() {
            let row = value.row_mut(i);
            for (v, &bv) in row.iter_mut().zip(b.data()) {
                *v += bv;
            }
        }
        self.push(
            Op::AddBiasRow(x.0, bias.0),
            value,
            self.needs(&[x, bias]),
            "add_bias_row",
        )
    }

    pub fn add(&mut self, a: TensorRef, b: TensorRef) -> Result<TensorRef, TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(shape("add", format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        let value = self.val(a).add(self.val(b));
        self.push(Op::Add(a.0, b.0), value, self.needs(&[a, b]), "add")
    }

    pub fn sub(&mut self, a: TensorRef, b: TensorRef) -> Result<TensorRef, TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(shape("sub", format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        let value = self.val(a).sub(self.val(b));
        self.push(Op::Sub(a.0, b.0), value, self.needs(&[a, b]), "sub")
    }

    pub fn relu(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let value = self.val(x).map(|v| v.max(0.0));
        self.push(Op::Relu(x.0), value, self.needs(&[x]), "relu")
    }

    pub fn leaky_relu(&mut self, x: TensorRef, slope: f64) -> Result<TensorRef, TensorError> {
        let value = self.val(x).map(|v| if v > 0.0 { v } else { slope * v });
        self.push(Op::LeakyRelu(x.0, slope), value, self.needs(&[x]), "leaky_relu")
    }

    pub fn sigmoid(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let value = self.val(x).map(|v| 1.0 / (1.0 + (-v).exp()));
        self.push(Op::Sigmoid(x.0), value, self.needs(&[x]), "sigmoid")
    }

    /// Rows of x selected by index, in the given order.
    pub fn gather_rows(&mut self, x: TensorRef, idx: &[usize]) -> Result<TensorRef, TensorError> {
        let (xr, xc) = self.shape(x);
        if let Some(&bad) = idx.iter().find(|&&i| i >= xr) {
            return Err(TensorError::IndexOutOfRange {
                op: "gather_rows",
                index: bad,
                bound: xr,
            });
        }
        let mut value = Matrix::zeros(idx.len(), xc);
        for (out_i, &src) in idx.iter().enumerate() {
            value.row_mut(out_i).copy_from_slice(self.val(x).row(src));
        }
        self.push(
            Op::GatherRows(x.0, idx.to_vec()),
            value,
            self.needs(&[x]),
            "gather_rows",
        )
    }

    /// Individual entries of x as a k×1 column.
    pub fn gather_entries(
        &mut self,
        x: TensorRef,
        entries: &[(usize, usize)],
    ) -> Result<TensorRef, TensorError> {
        let (xr, xc) = self.shape(x);
        let mut value = Matrix::zeros(entries.len(), 1);
        for (i, &(r, c)) in entries.iter().enumerate() {
            if r >= xr || c >= xc {
                return Err(TensorError::IndexOutOfRange {
                    op: "gather_entries",
                    index: r.max(c),
                    bound: xr.max(xc),
                });
            }
            value.set(i, 0, self.val(x).get(r, c));
        }
        self.push(
            Op::GatherEntries(x.0, entries.to_vec()),
            value,
            self.needs(&[x]),
            "gather_entries",
        )
    }

    /// Elementwise scaling by a compile-time constant.
    pub fn scale(&mut self, x: TensorRef, c: f64) -> Result<TensorRef, TensorError> {
        let value = self.val(x).map(|v| c * v);
        self.push(Op::Scale(x.0, c), value, self.needs(&[x]), "scale")
    }

    /// Row i of x scaled by s[i, 0]; s must be (rows×1).
    pub fn scale_rows(&mut self, x: TensorRef, s: TensorRef) -> Result<TensorRef, TensorError> {
        let (xr, _) = self.shape(x);
        let (sr, sc) = self.shape(s);
        if sr != xr || sc != 1 {
            return Err(shape("scale_rows", format!("scale {sr}x{sc} for {xr} rows")));
        }
        let sv = self.val(s).clone();
        let mut value = self.val(x).clone();
        for i in 0..xr {
            let f = sv.get(i, 0);
            for v in value.row_mut(i) {
                *v *= f;
            }
        }
        self.push(
            Op::ScaleRows(x.0, s.0),
            value,
            self.needs(&[x, s]),
            "scale_rows",
        )
    }

    /// Per-column maximum over the rows, as a 1×n row vector.
    pub fn max_over_rows(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let (xr, xc) = self.shape(x);
        if xr == 0 {
            return Err(shape("max_over_rows", "empty input".to_string()));
        }
        let mut value = Matrix::zeros(1, xc);
        for j in 0..xc {
            let mut best = f64::NEG_INFINITY;
            for i in 0..xr {
                let v = self.val(x).get(i, j);
                if v > best {
                    best = v;
                }
            }
            value.set(0, j, best);
        }
        self.push(Op::MaxOverRows(x.0), value, self.needs(&[x]), "max_over_rows")
    }

    /// Per-column minimum over the rows, as a 1×n row vector.
    pub fn min_over_rows(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let (xr, xc) = self.shape(x);
        if xr == 0 {
            return Err(shape("min_over_rows", "empty input".to_string()));
        }
        let mut value = Matrix::zeros(1, xc);
        for j in 0..xc {
            let mut best = f64::INFINITY;
            for i in 0..xr {
                let v = self.val(x).get(i, j);
                if v < best {
                    best = v;
                }
            }
            value.set(0, j, best);
        }
        self.push(Op::MinOverRows(x.0), value, self.needs(&[x]), "min_over_rows")
    }

    pub fn mean(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let (r, c) = self.shape(x);
        let value = Matrix::scalar(self.val(x).sum() / (r * c) as f64);
        self.push(Op::Mean(x.0), value, self.needs(&[x]), "mean")
    }

    pub fn sum(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let value = Matrix::scalar(self.val(x).sum());
        self.push(Op::Sum(x.0), value, self.needs(&[x]), "sum")
    }

    pub fn neg(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let value = self.val(x).map(|v| -v);
        self.push(Op::Neg(x.0), value, self.needs(&[x]), "neg")
    }

    /// Vertical concatenation; all parts must share a column count.
    pub fn concat_rows(&mut self, parts: &[TensorRef]) -> Result<TensorRef, TensorError> {
        if parts.is_empty() {
            return Err(shape("concat_rows", "no parts".to_string()));
        }
        let cols = self.shape(parts[0]).1;
        let mut rows = 0;
        for &p in parts {
            let (pr, pc) = self.shape(p);
            if pc != cols {
                return Err(shape("concat_rows", format!("{pc} cols vs {cols}")));
            }
            rows += pr;
        }
        let mut value = Matrix::zeros(rows, cols);
        let mut at = 0;
        for &p in parts {
            let pv = self.val(p);
            for i in 0..pv.rows() {
                value.row_mut(at).copy_from_slice(pv.row(i));
                at += 1;
            }
        }
        let needs = parts.iter().any(|&p| self.nodes[p.0].requires_grad);
        self.push(
            Op::ConcatRows(parts.iter().map(|p| p.0).collect()),
            value,
            needs,
            "concat_rows",
        )
    }

    /// Reverse sweep from a scalar loss. Gradients of parameter leaves
    /// accumulate into `params`; the tape is cleared afterwards.
    pub fn backward(&mut self, loss: TensorRef, params: &mut ParamStore) -> Result<(), TensorError> {
        if self.consumed {
            return Err(TensorError::TapeConsumed);
        }
        let (lr, lc) = self.shape(loss);
        if (lr, lc) != (1, 1) {
            return Err(TensorError::NotScalar { rows: lr, cols: lc });
        }
        if !self.nodes[loss.0].requires_grad {
            return Err(TensorError::DisconnectedLoss);
        }

        let mut grads: Vec<Option<Matrix>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(Matrix::scalar(1.0));

        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            if !self.nodes[id].requires_grad {
                continue;
            }
            if let Some(name) = self.nodes[id].param.clone() {
                params.accumulate_grad(&name, &g)?;
            }
            self.propagate(id, &g, &mut grads);
        }

        self.consumed = true;
        self.nodes.clear();
        Ok(())
    }

    fn propagate(&self, id: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let node = &self.nodes[id];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.nodes[*a].requires_grad {
                    self.accum(grads, *a, g.matmul_nt(&self.nodes[*b].value));
                }
                if self.nodes[*b].requires_grad {
                    self.accum(grads, *b, self.nodes[*a].value.matmul_tn(g));
                }
            }
            Op::SpMm { m, x } => {
                if self.nodes[*x].requires_grad {
                    self.accum(grads, *x, m.transpose_matmul_dense(g));
                }
            }
            Op::AddBiasRow(x, b) => {
                if self.nodes[*x].requires_grad {
                    self.accum(grads, *x, g.clone());
                }
                if self.nodes[*b].requires_grad {
                    self.accum(grads, *b, g.col_sums());
                }
            }
            Op::Add(a, b) => {
                if self.nodes[*a].requires_grad {
                    self.accum(grads, *a, g.clone());
                }
                if self.nodes[*b].requires_grad {
                    self.accum(grads, *b, g.clone());
                }
            }
            Op::Sub(a, b) => {
                if self.nodes[*a].requires_grad {
                    self.accum(grads, *a, g.clone());
                }
                if self.nodes[*b].requires_grad {
                    self.accum(grads, *b, g.map(|v| -v));
                }
            }
            Op::Relu(x) => {
                if self.nodes[*x].requires_grad {
                    let xin = &self.nodes[*x].value;
                    self.accum(grads, *x, g.zip(xin, |gv, xv| if xv > 0.0 { gv } else { 0.0 }));
                }
            }
            Op::LeakyRelu(x, slope) => {
                if self.nodes[*x].requires_grad {
                    let xin = &self.nodes[*x].value;
                    let s = *slope;
                    self.accum(grads, *x, g.zip(xin, |gv, xv| if xv > 0.0 { gv } else { s * gv }));
                }
            }
            Op::Sigmoid(x) => {
                if self.nodes[*x].requires_grad {
                    let y = &node.value;
                    self.accum(grads, *x, g.zip(y, |gv, yv| gv * yv * (1.0 - yv)));
                }
            }
            Op::GatherRows(x, idx) => {
                if self.nodes[*x].requires_grad {
                    let (xr, xc) = self.nodes[*x].value.shape();
                    let mut dx = Matrix::zeros(xr, xc);
                    for (out_i, &src) in idx.iter().enumerate() {
                        let row = dx.row_mut(src);
                        for (d, &gv) in row.iter_mut().zip(g.row(out_i)) {
                            *d += gv;
                        }
                    }
                    self.accum(grads, *x, dx);
                }
            }
            Op::GatherEntries(x, entries) => {
                if self.nodes[*x].requires_grad {
                    let (xr, xc) = self.nodes[*x].value.shape();
                    let mut dx = Matrix::zeros(xr, xc);
                    for (i, &(r, c)) in entries.iter().enumerate() {
                        dx.set(r, c, dx.get(r, c) + g.get(i, 0));
                    }
                    self.accum(grads, *x, dx);
                }
            }
            Op::Scale(x, c) => {
                if self.nodes[*x].requires_grad {
                    let f = *c;
                    self.accum(grads, *x, g.map(|v| f * v));
                }
            }
            Op::ScaleRows(x, s) => {
                let xin = &self.nodes[*x].value;
                let sin = &self.nodes[*s].value;
                if self.nodes[*x].requires_grad {
                    let mut dx = g.clone();
                    for i in 0..dx.rows() {
                        let f = sin.get(i, 0);
                        for v in dx.row_mut(i) {
                            *v *= f;
                        }
                    }
                    self.accum(grads, *x, dx);
                }
                if self.nodes[*s].requires_grad {
                    let mut ds = Matrix::zeros(sin.rows(), 1);
                    for i in 0..xin.rows() {
                        let dot: f64 = g
                            .row(i)
                            .iter()
                            .zip(xin.row(i))
                            .map(|(&gv, &xv)| gv * xv)
                            .sum();
                        ds.set(i, 0, dot);
                    }
                    self.accum(grads, *s, ds);
                }
            }
            // Gradient routes to the first row attaining the extremum,
            // ties broken by lowest row index.
            Op::MaxOverRows(x) => {
                if self.nodes[*x].requires_grad {
                    let xin = &self.nodes[*x].value;
                    let mut dx = Matrix::zeros(xin.rows(), xin.cols());
                    for j in 0..xin.cols() {
                        let mut arg = 0;
                        let mut best = xin.get(0, j);
                        for i in 1..xin.rows() {
                            let v = xin.get(i, j);
                            if v > best {
                                best = v;
                                arg = i;
                            }
                        }
                        dx.set(arg, j, g.get(0, j));
                    }
                    self.accum(grads, *x, dx);
                }
            }
            Op::MinOverRows(x) => {
                if self.nodes[*x].requires_grad {
                    let xin = &self.nodes[*x].value;
                    let mut dx = Matrix::zeros(xin.rows(), xin.cols());
                    for j in 0..xin.cols() {
                        let mut arg = 0;
                        let mut best = xin.get(0, j);
                        for i in 1..xin.rows() {
                            let v = xin.get(i, j);
                            if v < best {
                                best = v;
                                arg = i;
                            }
                        }
                        dx.set(arg, j, g.get(0, j));
                    }
                    self.accum(grads, *x, dx);
                }
            }
            Op::Mean(x) => {
                if self.nodes[*x].requires_grad {
                    let (r, c) = self.nodes[*x].value.shape();
                    let gv = g.scalar_value() / (r * c) as f64;
                    self.accum(grads, *x, Matrix::filled(r, c, gv));
                }
            }
            Op::Sum(x) => {
                if self.nodes[*x].requires_grad {
                    let (r, c) = self.nodes[*x].value.shape();
                    self.accum(grads, *x, Matrix::filled(r, c, g.scalar_value()));
                }
            }
            Op::Neg(x) => {
                if self.nodes[*x].requires_grad {
                    self.accum(grads, *x, g.map(|v| -v));
                }
            }
            Op::ConcatRows(parts) => {
                let mut at = 0;
                for &p in parts {
                    let pr = self.nodes[p].value.rows();
                    if self.nodes[p].requires_grad {
                        let mut dp = Matrix::zeros(pr, g.cols());
                        for i in 0..pr {
                            dp.row_mut(i).copy_from_slice(g.row(at + i));
                        }
                        self.accum(grads, p, dp);
                    }
                    at += pr;
                }
            }
        }
    }

    fn accum(&self, grads: &mut [Option<Matrix>], id: usize, delta: Matrix) {
        match &mut grads[id] {
            Some(g) => g.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn val(&self, t: TensorRef) -> &Matrix {
        &self.nodes[t.0].value
    }

    fn needs(&self, inputs: &[TensorRef]) -> bool {
        inputs.iter().any(|&t| self.nodes[t.0].requires_grad)
    }

    fn push(
        &mut self,
        op: Op,
        value: Matrix,
        requires_grad: bool,
        name: &'static str,
    ) -> Result<TensorRef, TensorError> {
        if !value.all_finite() {
            return Err(TensorError::NonFinite { op: name });
        }
        Ok(self.push_unchecked(op, value, requires_grad, None))
    }

    fn push_unchecked(
        &mut self,
        op: Op,
        value: Matrix,
        requires_grad: bool,
        param: Option<String>,
    ) -> TensorRef {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
            param,
        });
        TensorRef(self.nodes.len() - 1)
    }
}

fn shape(op: &'static str, detail: String) -> TensorError {
    TensorError::ShapeMismatch { op, detail }
}
