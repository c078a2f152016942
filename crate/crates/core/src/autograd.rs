//! Reverse-mode differentiation over a recorded tape of matrix ops.
//!
//! A [`Tape`] borrows a [`ParamStore`] read-only, records the forward
//! computation, and [`Tape::backward`] returns [`Gradients`] for every
//! parameter and recorded node. Gradients are applied to the store separately,
//! so several tapes can run against the same parameters.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{gemm, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Parameter>,
    by_name: HashMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a parameter. Names must be unique.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter name {name}")));
        }
        let id = ParamId(self.params.len());
        let grad = Tensor::zeros(value.shape());
        self.by_name.insert(name.clone(), id);
        self.params.push(Parameter { name, value, grad });
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.data_mut().fill(0.0);
        }
    }

    /// Adds a gradient set into the parameters' grad slots.
    pub fn accumulate(&mut self, grads: &Gradients) {
        for (i, g) in grads.params.iter().enumerate() {
            if let Some(g) = g {
                self.params[i].grad.add_assign(g);
            }
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Value {
    Owned(Tensor),
    Param(ParamId),
}

enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    Elu(Var),
    Sigmoid(Var),
    SoftmaxRows(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Tensor,
        inv_std: Vec<f64>,
    },
    GatherRows {
        src: Var,
        index: Vec<usize>,
    },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols {
        x: Var,
        start: usize,
    },
    Transpose(Var),
    Sum(Var),
    SoftCrossEntropy {
        logits: Var,
        targets: Tensor,
        weights: Vec<f64>,
        probs: Tensor,
    },
}

struct Node {
    value: Value,
    op: Op,
}

/// Gradients produced by one backward pass.
#[derive(Clone, Debug)]
pub struct Gradients {
    params: Vec<Option<Tensor>>,
    nodes: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self {
            params: store
                .params
                .iter()
                .map(|p| Some(Tensor::zeros(p.value.shape())))
                .collect(),
            nodes: Vec::new(),
        }
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params.get(id.0).and_then(Option::as_ref)
    }

    /// Gradient with respect to a recorded node (e.g. an input leaf).
    pub fn wrt(&self, var: Var) -> Option<&Tensor> {
        self.nodes.get(var.0).and_then(Option::as_ref)
    }

    /// Merges another parameter gradient set into this one.
    pub fn add(&mut self, other: &Gradients) {
        if self.params.len() < other.params.len() {
            self.params.resize(other.params.len(), None);
        }
        for (mine, theirs) in self.params.iter_mut().zip(&other.params) {
            match (mine.as_mut(), theirs) {
                (Some(m), Some(t)) => m.add_assign(t),
                (None, Some(t)) => *mine = Some(t.clone()),
                _ => {}
            }
        }
    }

    pub fn into_param_grads(self) -> Vec<Option<Tensor>> {
        self.params
    }
}

pub struct Tape<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
}

fn rows_cols(t: &Tensor) -> (usize, usize) {
    (t.rows(), t.cols())
}

impl<'p> Tape<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Self {
            store,
            nodes: Vec::new(),
        }
    }

    pub fn store(&self) -> &ParamStore {
        self.store
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match &self.nodes[v.0].value {
            Value::Owned(t) => t,
            Value::Param(id) => &self.store.get(*id).value,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node {
            value: Value::Owned(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a constant or input tensor.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            value: Value::Param(id),
            op: Op::Param(id),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if rows_cols(ta) != rows_cols(tb) {
            return Err(Error::dim("add", ta.shape(), tb.shape()));
        }
        let out = ta.zip_map(tb, |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Adds a length-`C` row vector to every row of an `R × C` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (ta, tr) = (self.value(a), self.value(row));
        if tr.rows() != 1 || tr.cols() != ta.cols() {
            return Err(Error::dim("add_row", ta.shape(), tr.shape()));
        }
        let mut out = ta.clone();
        let c = ta.cols();
        for r in 0..ta.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(&tr.data()[..c]) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddRow(a, row)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if rows_cols(ta) != rows_cols(tb) {
            return Err(Error::dim("mul", ta.shape(), tb.shape()));
        }
        let out = ta.zip_map(tb, |x, y| x * y);
        Ok(self.push(out, Op::Mul(a, b)))
    }

    /// Scales row `r` of `a` by `w[r, 0]`.
    pub fn mul_col(&mut self, a: Var, w: Var) -> Result<Var> {
        let (ta, tw) = (self.value(a), self.value(w));
        if tw.cols() != 1 || tw.rows() != ta.rows() {
            return Err(Error::dim("mul_col", ta.shape(), tw.shape()));
        }
        let mut out = ta.clone();
        for r in 0..ta.rows() {
            let k = tw.data()[r];
            out.row_mut(r).iter_mut().for_each(|v| *v *= k);
        }
        Ok(self.push(out, Op::MulCol(a, w)))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let out = self.value(a).map(|x| x * k);
        self.push(out, Op::Scale(a, k))
    }

    /// ELU with alpha = 1.
    pub fn elu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(elu);
        self.push(out, Op::Elu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    /// Softmax along `axis` of a rank-2 tensor (rank-1 inputs use axis 0).
    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let t = self.value(x);
        let last = t.rank() - 1;
        if axis > last {
            return Err(Error::Index {
                index: axis,
                len: t.rank(),
            });
        }
        if axis == last {
            self.masked_softmax_rows(x, None)
        } else {
            let xt = self.transpose(x);
            let s = self.masked_softmax_rows(xt, None)?;
            Ok(self.transpose(s))
        }
    }

    /// Row softmax with an optional column validity mask. Masked columns get
    /// probability zero; a row with every column masked is all zeros.
    pub fn masked_softmax_rows(&mut self, x: Var, mask: Option<&[bool]>) -> Result<Var> {
        let t = self.value(x);
        let (r, c) = rows_cols(t);
        if let Some(m) = mask {
            if m.len() != c {
                return Err(Error::dim("masked_softmax", t.shape(), &[m.len()]));
            }
        }
        let valid = |j: usize| mask.is_none_or(|m| m[j]);
        let mut out = Tensor::zeros(t.shape());
        for i in 0..r {
            let row = t.row(i);
            let max = (0..c)
                .filter(|&j| valid(j))
                .map(|j| row[j])
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                continue;
            }
            let o = out.row_mut(i);
            let mut z = 0.0;
            for j in 0..c {
                if valid(j) {
                    o[j] = (row[j] - max).exp();
                    z += o[j];
                }
            }
            o.iter_mut().for_each(|v| *v /= z);
        }
        Ok(self.push(out, Op::SoftmaxRows(x)))
    }

    /// Row-wise layer normalization with population variance.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let t = self.value(x);
        let (r, c) = rows_cols(t);
        let (g, b) = (self.value(gain), self.value(bias));
        if g.len() != c || b.len() != c {
            return Err(Error::dim("layer_norm", t.shape(), g.shape()));
        }
        let mut xhat = Tensor::zeros(t.shape());
        let mut out = Tensor::zeros(t.shape());
        let mut inv_std = Vec::with_capacity(r);
        for i in 0..r {
            let row = t.row(i);
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std.push(inv);
            let xh = xhat.row_mut(i);
            for j in 0..c {
                xh[j] = (row[j] - mean) * inv;
            }
            let xh = xhat.row(i).to_vec();
            let o = out.row_mut(i);
            for j in 0..c {
                o[j] = xh[j] * g.data()[j] + b.data()[j];
            }
        }
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
        ))
    }

    /// Selects rows of `src` by index (duplicates allowed). Backward
    /// scatter-adds into the selected rows only.
    pub fn gather_rows(&mut self, src: Var, index: &[usize]) -> Result<Var> {
        let t = self.value(src);
        let (r, c) = rows_cols(t);
        if index.is_empty() {
            return Err(Error::dim("gather_rows", t.shape(), &[0]));
        }
        let mut data = Vec::with_capacity(index.len() * c);
        for &i in index {
            if i >= r {
                return Err(Error::Index { index: i, len: r });
            }
            data.extend_from_slice(t.row(i));
        }
        let out = Tensor::matrix(index.len(), c, data)?;
        Ok(self.push(
            out,
            Op::GatherRows {
                src,
                index: index.to_vec(),
            },
        ))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let r = self.value(parts[0]).rows();
        let widths: Vec<usize> = parts.iter().map(|&p| self.value(p).cols()).collect();
        for &p in parts {
            if self.value(p).rows() != r {
                return Err(Error::dim(
                    "concat_cols",
                    self.value(parts[0]).shape(),
                    self.value(p).shape(),
                ));
            }
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(r * total);
        for i in 0..r {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(i));
            }
        }
        let out = Tensor::matrix(r, total, data)?;
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let c = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            if t.cols() != c {
                return Err(Error::dim(
                    "concat_rows",
                    self.value(parts[0]).shape(),
                    t.shape(),
                ));
            }
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        let out = Tensor::matrix(rows, c, data)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, width: usize) -> Result<Var> {
        let t = self.value(x);
        let (r, c) = rows_cols(t);
        if width == 0 || start + width > c {
            return Err(Error::dim("slice_cols", t.shape(), &[start, width]));
        }
        let mut data = Vec::with_capacity(r * width);
        for i in 0..r {
            data.extend_from_slice(&t.row(i)[start..start + width]);
        }
        let out = Tensor::matrix(r, width, data)?;
        Ok(self.push(out, Op::SliceCols { x, start }))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let out = self.value(x).transpose();
        self.push(out, Op::Transpose(x))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    /// `x · W + b` with the bias broadcast over rows.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (tx, tw, tb) = (self.value(x), self.value(w), self.value(b));
        if tx.cols() != tw.rows() {
            return Err(Error::dim("linear", tx.shape(), tw.shape()));
        }
        if tb.len() != tw.cols() {
            return Err(Error::dim("linear", tw.shape(), tb.shape()));
        }
        let xw = self.matmul(x, w)?;
        self.add_row(xw, b)
    }

    /// Looks up one row of an embedding table as a `1 × d` tensor.
    pub fn embed_lookup(&mut self, table: Var, index: usize) -> Result<Var> {
        self.gather_rows(table, &[index])
    }

    /// Weighted soft-target cross entropy over rows:
    /// `Σ_r weights[r] · (−Σ_k targets[r,k] · ln softmax(logits[r])_k)`.
    pub fn soft_cross_entropy(
        &mut self,
        logits: Var,
        targets: Tensor,
        weights: Vec<f64>,
    ) -> Result<Var> {
        let t = self.value(logits);
        let (r, c) = rows_cols(t);
        if rows_cols(&targets) != (r, c) || weights.len() != r {
            return Err(Error::dim("soft_cross_entropy", t.shape(), targets.shape()));
        }
        let mut probs = Tensor::zeros(&[r, c]);
        let mut loss = 0.0;
        for i in 0..r {
            let row = t.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            let p = probs.row_mut(i);
            let mut row_loss = 0.0;
            for k in 0..c {
                let logp = row[k] - lse;
                p[k] = logp.exp();
                let tk = targets.get(i, k);
                if tk != 0.0 {
                    row_loss -= tk * logp;
                }
            }
            loss += weights[i] * row_loss;
        }
        if !loss.is_finite() {
            return Err(Error::Numeric("non-finite cross entropy".into()));
        }
        Ok(self.push(
            Tensor::scalar(loss),
            Op::SoftCrossEntropy {
                logits,
                targets,
                weights,
                probs,
            },
        ))
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.len() != 1 {
            return Err(Error::dim("backward", lt.shape(), &[1]));
        }
        if !lt.is_finite() {
            return Err(Error::Numeric("non-finite loss".into()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        let mut pgrads: Vec<Option<Tensor>> = vec![None; self.store.len()];
        grads[loss.0] = Some(Tensor::filled(lt.shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            self.backprop_node(idx, &g, &mut grads, &mut pgrads);
            grads[idx] = Some(g);
        }
        Ok(Gradients {
            params: pgrads,
            nodes: grads,
        })
    }

    fn backprop_node(
        &self,
        idx: usize,
        g: &Tensor,
        grads: &mut [Option<Tensor>],
        pgrads: &mut [Option<Tensor>],
    ) {
        let mut acc = |v: Var, delta: Tensor| match &mut grads[v.0] {
            Some(t) => t.add_assign(&delta),
            slot @ None => {
                let shape = self.value(v).shape().to_vec();
                *slot = Some(delta.reshape(shape).expect("gradient shape"));
            }
        };
        match &self.nodes[idx].op {
            Op::Leaf => {}
            Op::Param(id) => match &mut pgrads[id.0] {
                Some(t) => t.add_assign(g),
                slot @ None => *slot = Some(g.clone()),
            },
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                let mut da = vec![0.0; m * k];
                gemm(m, n, k, g.data(), false, tb.data(), true, &mut da, 0.0);
                let mut db = vec![0.0; k * n];
                gemm(k, m, n, ta.data(), true, g.data(), false, &mut db, 0.0);
                acc(*a, Tensor::matrix(m, k, da).unwrap());
                acc(*b, Tensor::matrix(k, n, db).unwrap());
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::AddRow(a, row) => {
                let c = g.cols();
                let mut db = vec![0.0; c];
                for r in 0..g.rows() {
                    for (d, v) in db.iter_mut().zip(g.row(r)) {
                        *d += v;
                    }
                }
                acc(*a, g.clone());
                acc(*row, Tensor::vector(db));
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                acc(*a, g.zip_map(tb, |x, y| x * y));
                acc(*b, g.zip_map(ta, |x, y| x * y));
            }
            Op::MulCol(a, w) => {
                let (ta, tw) = (self.value(*a), self.value(*w));
                let mut da = g.clone();
                let mut dw = vec![0.0; ta.rows()];
                for r in 0..ta.rows() {
                    let k = tw.data()[r];
                    dw[r] = g.row(r).iter().zip(ta.row(r)).map(|(x, y)| x * y).sum();
                    da.row_mut(r).iter_mut().for_each(|v| *v *= k);
                }
                acc(*a, da);
                acc(*w, Tensor::vector(dw));
            }
            Op::Scale(a, k) => acc(*a, g.map(|x| x * k)),
            Op::Elu(a) => {
                let ta = self.value(*a);
                acc(*a, g.zip_map(ta, |gv, x| if x > 0.0 { gv } else { gv * x.exp() }));
            }
            Op::Sigmoid(a) => {
                let y = self.value(Var(idx));
                acc(*a, g.zip_map(y, |gv, s| gv * s * (1.0 - s)));
            }
            Op::SoftmaxRows(a) => {
                let y = self.value(Var(idx));
                let mut dx = Tensor::zeros(y.shape());
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for (d, (yv, gv)) in dx.row_mut(r).iter_mut().zip(yr.iter().zip(gr)) {
                        *d = yv * (gv - dot);
                    }
                }
                acc(*a, dx);
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            } => {
                let gv = self.value(*gain);
                let c = xhat.cols();
                let mut dx = Tensor::zeros(xhat.shape());
                let mut dg = vec![0.0; c];
                let mut db = vec![0.0; c];
                for r in 0..xhat.rows() {
                    let (xh, gr) = (xhat.row(r), g.row(r));
                    let mut dxh = vec![0.0; c];
                    for j in 0..c {
                        dg[j] += gr[j] * xh[j];
                        db[j] += gr[j];
                        dxh[j] = gr[j] * gv.data()[j];
                    }
                    let s1: f64 = dxh.iter().sum();
                    let s2: f64 = dxh.iter().zip(xh).map(|(a, b)| a * b).sum();
                    let k = inv_std[r] / c as f64;
                    for (j, d) in dx.row_mut(r).iter_mut().enumerate() {
                        *d = k * (c as f64 * dxh[j] - s1 - xh[j] * s2);
                    }
                }
                acc(*x, dx);
                acc(*gain, Tensor::vector(dg));
                acc(*bias, Tensor::vector(db));
            }
            Op::GatherRows { src, index } => {
                let ts = self.value(*src);
                let mut ds = Tensor::zeros(&[ts.rows(), ts.cols()]);
                for (r, &i) in index.iter().enumerate() {
                    for (d, v) in ds.row_mut(i).iter_mut().zip(g.row(r)) {
                        *d += v;
                    }
                }
                acc(*src, ds);
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    let r = g.rows();
                    let mut d = Vec::with_capacity(r * w);
                    for i in 0..r {
                        d.extend_from_slice(&g.row(i)[offset..offset + w]);
                    }
                    acc(p, Tensor::matrix(r, w, d).unwrap());
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let c = g.cols();
                let mut offset = 0;
                for &p in parts {
                    let r = self.value(p).rows();
                    let d = g.data()[offset * c..(offset + r) * c].to_vec();
                    acc(p, Tensor::matrix(r, c, d).unwrap());
                    offset += r;
                }
            }
            Op::SliceCols { x, start } => {
                let tx = self.value(*x);
                let mut dx = Tensor::zeros(&[tx.rows(), tx.cols()]);
                let w = g.cols();
                for r in 0..g.rows() {
                    dx.row_mut(r)[*start..*start + w].copy_from_slice(g.row(r));
                }
                acc(*x, dx);
            }
            Op::Transpose(x) => acc(*x, g.transpose()),
            Op::Sum(x) => {
                let shape = self.value(*x).shape().to_vec();
                acc(*x, Tensor::filled(&shape, g.data()[0]));
            }
            Op::SoftCrossEntropy {
                logits,
                targets,
                weights,
                probs,
            } => {
                let up = g.data()[0];
                let mut dl = probs.clone();
                for (r, w) in weights.iter().enumerate() {
                    let k = up * w;
                    let t = targets.row(r).to_vec();
                    for (d, tv) in dl.row_mut(r).iter_mut().zip(t) {
                        *d = k * (*d - tv);
                    }
                }
                acc(*logits, dl);
            }
        }
    }
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
