//! Eager reverse-mode autodiff over [`Tensor`] values.
//!
//! A [`Tape`] records every forward op as it is evaluated; `backward` walks
//! the record in reverse and accumulates exact gradients for each named
//! parameter leaf. Parameters bound twice under the same name share one leaf,
//! which is what lets an episode-long tape reuse the text encoding and the
//! weight matrices across steps while still accumulating their gradients.

use std::collections::HashMap;

use crate::nn::tensor::Tensor;

pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    /// Leaf bound to a named parameter.
    Param,
    /// Constant input; no gradient.
    Input,
    MatMul,
    MatMulNT,
    Add,
    /// A (n×d) + row (1×d), broadcast over rows.
    AddRow,
    /// A (n×d) ⊙ row (1×d), broadcast over rows.
    MulRow,
    Hadamard,
    Scale(f64),
    Tanh,
    Sigmoid,
    SoftmaxRows,
    ConcatRows,
    ConcatCols,
    SliceRows(usize, usize),
    SliceCols(usize, usize),
    Transpose,
    /// Rows of the parent gathered by index (embedding lookup).
    Gather(Vec<usize>),
    MeanAll,
    /// Softmax cross-entropy of a 1×n logit row against a target index.
    CeRow(usize),
    /// Sigmoid binary cross-entropy of a 1×1 logit against a 0/1 label.
    BceLogit(f64),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    parents: Vec<NodeId>,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    param_ids: HashMap<String, NodeId>,
    param_names: Vec<(NodeId, String)>,
}

/// Gradients keyed by parameter name.
pub type Gradients = HashMap<String, Tensor>;

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, parents: Vec<NodeId>) -> NodeId {
        let needs_grad = matches!(op, Op::Param)
            || parents.iter().any(|&p| self.nodes[p].needs_grad);
        self.nodes.push(Node { value, op, parents, needs_grad });
        self.nodes.len() - 1
    }

    /// Bind a named parameter leaf. Re-binding the same name returns the
    /// existing node so gradients accumulate across uses.
    pub fn param(&mut self, name: &str, value: &Tensor) -> NodeId {
        if let Some(&id) = self.param_ids.get(name) {
            return id;
        }
        let id = self.push(value.clone(), Op::Param, vec![]);
        self.param_ids.insert(name.to_string(), id);
        self.param_names.push((id, name.to_string()));
        id
    }

    /// Constant input (observations, cached encodings, labels).
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Input, vec![])
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.nodes[a].value.matmul(&self.nodes[b].value);
        self.push(v, Op::MatMul, vec![a, b])
    }

    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.nodes[a].value.matmul_nt(&self.nodes[b].value);
        self.push(v, Op::MatMulNT, vec![a, b])
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.nodes[a].value.add(&self.nodes[b].value);
        self.push(v, Op::Add, vec![a, b])
    }

    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let (av, rv) = (&self.nodes[a].value, &self.nodes[row].value);
        assert_eq!(rv.rows(), 1, "add_row expects a 1×d row");
        assert_eq!(av.cols(), rv.cols(), "add_row width mismatch");
        let mut v = av.clone();
        for r in 0..v.rows() {
            for c in 0..v.cols() {
                let x = v.at(r, c) + rv.at(0, c);
                v.set(r, c, x);
            }
        }
        self.push(v, Op::AddRow, vec![a, row])
    }

    pub fn mul_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let (av, rv) = (&self.nodes[a].value, &self.nodes[row].value);
        assert_eq!(rv.rows(), 1, "mul_row expects a 1×d row");
        assert_eq!(av.cols(), rv.cols(), "mul_row width mismatch");
        let mut v = av.clone();
        for r in 0..v.rows() {
            for c in 0..v.cols() {
                let x = v.at(r, c) * rv.at(0, c);
                v.set(r, c, x);
            }
        }
        self.push(v, Op::MulRow, vec![a, row])
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.nodes[a].value.hadamard(&self.nodes[b].value);
        self.push(v, Op::Hadamard, vec![a, b])
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        let v = self.nodes[a].value.scale(s);
        self.push(v, Op::Scale(s), vec![a])
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.map(f64::tanh);
        self.push(v, Op::Tanh, vec![a])
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.map(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(v, Op::Sigmoid, vec![a])
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.softmax_rows();
        self.push(v, Op::SoftmaxRows, vec![a])
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> NodeId {
        let tensors: Vec<&Tensor> = parts.iter().map(|&p| &self.nodes[p].value).collect();
        let v = Tensor::concat_rows(&tensors);
        self.push(v, Op::ConcatRows, parts.to_vec())
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        let tensors: Vec<&Tensor> = parts.iter().map(|&p| &self.nodes[p].value).collect();
        let v = Tensor::concat_cols(&tensors);
        self.push(v, Op::ConcatCols, parts.to_vec())
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, end: usize) -> NodeId {
        let v = self.nodes[a].value.slice_rows(start, end);
        self.push(v, Op::SliceRows(start, end), vec![a])
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, end: usize) -> NodeId {
        let v = self.nodes[a].value.slice_cols(start, end);
        self.push(v, Op::SliceCols(start, end), vec![a])
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.transpose();
        self.push(v, Op::Transpose, vec![a])
    }

    pub fn gather(&mut self, table: NodeId, indices: &[usize]) -> NodeId {
        let v = self.nodes[table].value.gather_rows(indices);
        self.push(v, Op::Gather(indices.to_vec()), vec![table])
    }

    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let v = Tensor::scalar(self.nodes[a].value.mean_all());
        self.push(v, Op::MeanAll, vec![a])
    }

    /// Mean of several scalar nodes.
    pub fn mean_scalars(&mut self, parts: &[NodeId]) -> NodeId {
        let cat = self.concat_cols(parts);
        self.mean_all(cat)
    }

    /// Softmax cross-entropy of 1×n logits against `target`.
    pub fn cross_entropy_row(&mut self, logits: NodeId, target: usize) -> NodeId {
        let l = &self.nodes[logits].value;
        assert_eq!(l.rows(), 1, "cross_entropy_row expects 1×n logits");
        assert!(target < l.cols(), "target out of range");
        let max = l.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + l.data().iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let loss = lse - l.at(0, target);
        self.push(Tensor::scalar(loss), Op::CeRow(target), vec![logits])
    }

    /// Sigmoid binary cross-entropy of a 1×1 logit against `label` ∈ {0,1}.
    pub fn bce_logit(&mut self, logit: NodeId, label: f64) -> NodeId {
        let x = self.nodes[logit].value.item();
        // log(1 + e^-|x|) + max(x,0) - x·y, the stable form.
        let loss = x.max(0.0) - x * label + (1.0 + (-x.abs()).exp()).ln();
        self.push(Tensor::scalar(loss), Op::BceLogit(label), vec![logit])
    }

    /// Reverse pass from a scalar `loss` node; returns gradients per
    /// parameter name.
    pub fn backward(&self, loss: NodeId) -> Gradients {
        assert_eq!(self.nodes[loss].value.len(), 1, "backward needs a scalar loss");
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss] = Some(Tensor::scalar(1.0));

        for id in (0..=loss).rev() {
            let g = match grads[id].take() {
                Some(g) => g,
                None => continue,
            };
            let node = &self.nodes[id];
            if !node.needs_grad {
                continue;
            }
            match &node.op {
                Op::Param | Op::Input => {
                    grads[id] = Some(g);
                    continue;
                }
                Op::MatMul => {
                    let (a, b) = (node.parents[0], node.parents[1]);
                    if self.nodes[a].needs_grad {
                        let da = g.matmul_nt(&self.nodes[b].value);
                        accumulate(&mut grads, a, da);
                    }
                    if self.nodes[b].needs_grad {
                        let db = self.nodes[a].value.matmul_tn(&g);
                        accumulate(&mut grads, b, db);
                    }
                }
                Op::MatMulNT => {
                    let (a, b) = (node.parents[0], node.parents[1]);
                    if self.nodes[a].needs_grad {
                        let da = g.matmul(&self.nodes[b].value);
                        accumulate(&mut grads, a, da);
                    }
                    if self.nodes[b].needs_grad {
                        let db = g.matmul_tn(&self.nodes[a].value);
                        accumulate(&mut grads, b, db);
                    }
                }
                Op::Add => {
                    for &p in &node.parents {
                        if self.nodes[p].needs_grad {
                            accumulate(&mut grads, p, g.clone());
                        }
                    }
                }
                Op::AddRow => {
                    let (a, row) = (node.parents[0], node.parents[1]);
                    if self.nodes[a].needs_grad {
                        accumulate(&mut grads, a, g.clone());
                    }
                    if self.nodes[row].needs_grad {
                        let mut dr = Tensor::zeros(1, g.cols());
                        for r in 0..g.rows() {
                            for c in 0..g.cols() {
                                dr.set(0, c, dr.at(0, c) + g.at(r, c));
                            }
                        }
                        accumulate(&mut grads, row, dr);
                    }
                }
                Op::MulRow => {
                    let (a, row) = (node.parents[0], node.parents[1]);
                    let (av, rv) = (&self.nodes[a].value, &self.nodes[row].value);
                    if self.nodes[a].needs_grad {
                        let mut da = g.clone();
                        for r in 0..da.rows() {
                            for c in 0..da.cols() {
                                da.set(r, c, da.at(r, c) * rv.at(0, c));
                            }
                        }
                        accumulate(&mut grads, a, da);
                    }
                    if self.nodes[row].needs_grad {
                        let mut dr = Tensor::zeros(1, g.cols());
                        for r in 0..g.rows() {
                            for c in 0..g.cols() {
                                dr.set(0, c, dr.at(0, c) + g.at(r, c) * av.at(r, c));
                            }
                        }
                        accumulate(&mut grads, row, dr);
                    }
                }
                Op::Hadamard => {
                    let (a, b) = (node.parents[0], node.parents[1]);
                    if self.nodes[a].needs_grad {
                        accumulate(&mut grads, a, g.hadamard(&self.nodes[b].value));
                    }
                    if self.nodes[b].needs_grad {
                        accumulate(&mut grads, b, g.hadamard(&self.nodes[a].value));
                    }
                }
                Op::Scale(s) => {
                    accumulate(&mut grads, node.parents[0], g.scale(*s));
                }
                Op::Tanh => {
                    let y = &node.value;
                    let da = Tensor::from_vec(
                        g.rows(),
                        g.cols(),
                        g.data().iter().zip(y.data()).map(|(dg, y)| dg * (1.0 - y * y)).collect(),
                    );
                    accumulate(&mut grads, node.parents[0], da);
                }
                Op::Sigmoid => {
                    let y = &node.value;
                    let da = Tensor::from_vec(
                        g.rows(),
                        g.cols(),
                        g.data().iter().zip(y.data()).map(|(dg, y)| dg * y * (1.0 - y)).collect(),
                    );
                    accumulate(&mut grads, node.parents[0], da);
                }
                Op::SoftmaxRows => {
                    let y = &node.value;
                    let mut da = Tensor::zeros(g.rows(), g.cols());
                    for r in 0..g.rows() {
                        let dot: f64 =
                            g.row(r).iter().zip(y.row(r)).map(|(dg, y)| dg * y).sum();
                        for c in 0..g.cols() {
                            da.set(r, c, y.at(r, c) * (g.at(r, c) - dot));
                        }
                    }
                    accumulate(&mut grads, node.parents[0], da);
                }
                Op::ConcatRows => {
                    let mut start = 0;
                    for &p in &node.parents {
                        let rows = self.nodes[p].value.rows();
                        if self.nodes[p].needs_grad {
                            accumulate(&mut grads, p, g.slice_rows(start, start + rows));
                        }
                        start += rows;
                    }
                }
                Op::ConcatCols => {
                    let mut start = 0;
                    for &p in &node.parents {
                        let cols = self.nodes[p].value.cols();
                        if self.nodes[p].needs_grad {
                            accumulate(&mut grads, p, g.slice_cols(start, start + cols));
                        }
                        start += cols;
                    }
                }
                Op::SliceRows(start, _end) => {
                    let p = node.parents[0];
                    let pv = &self.nodes[p].value;
                    let mut da = Tensor::zeros(pv.rows(), pv.cols());
                    for r in 0..g.rows() {
                        for c in 0..g.cols() {
                            da.set(start + r, c, g.at(r, c));
                        }
                    }
                    accumulate(&mut grads, p, da);
                }
                Op::SliceCols(start, _end) => {
                    let p = node.parents[0];
                    let pv = &self.nodes[p].value;
                    let mut da = Tensor::zeros(pv.rows(), pv.cols());
                    for r in 0..g.rows() {
                        for c in 0..g.cols() {
                            da.set(r, start + c, g.at(r, c));
                        }
                    }
                    accumulate(&mut grads, p, da);
                }
                Op::Transpose => {
                    accumulate(&mut grads, node.parents[0], g.transpose());
                }
                Op::Gather(indices) => {
                    let p = node.parents[0];
                    let pv = &self.nodes[p].value;
                    let mut da = Tensor::zeros(pv.rows(), pv.cols());
                    for (i, &idx) in indices.iter().enumerate() {
                        for c in 0..g.cols() {
                            da.set(idx, c, da.at(idx, c) + g.at(i, c));
                        }
                    }
                    accumulate(&mut grads, p, da);
                }
                Op::MeanAll => {
                    let p = node.parents[0];
                    let pv = &self.nodes[p].value;
                    let s = g.item() / pv.len() as f64;
                    accumulate(&mut grads, p, Tensor::from_vec(pv.rows(), pv.cols(), vec![s; pv.len()]));
                }
                Op::CeRow(target) => {
                    let p = node.parents[0];
                    let probs = self.nodes[p].value.softmax_rows();
                    let mut da = probs;
                    da.set(0, *target, da.at(0, *target) - 1.0);
                    accumulate(&mut grads, p, da.scale(g.item()));
                }
                Op::BceLogit(label) => {
                    let p = node.parents[0];
                    let x = self.nodes[p].value.item();
                    let sig = 1.0 / (1.0 + (-x).exp());
                    accumulate(&mut grads, p, Tensor::scalar(g.item() * (sig - label)));
                }
            }
        }

        let mut out = Gradients::new();
        for (id, name) in &self.param_names {
            if let Some(g) = grads[*id].take() {
                out.insert(name.clone(), g);
            }
        }
        out
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) {
    match &mut grads[id] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite difference on one parameter entry.
    fn fd_grad(
        value: &mut Tensor,
        idx: usize,
        eps: f64,
        mut loss: impl FnMut(&Tensor) -> f64,
    ) -> f64 {
        let orig = value.data()[idx];
        value.data_mut()[idx] = orig + eps;
        let up = loss(value);
        value.data_mut()[idx] = orig - eps;
        let down = loss(value);
        value.data_mut()[idx] = orig;
        (up - down) / (2.0 * eps)
    }

    #[test]
    fn gradients_match_finite_differences_through_every_op() {
        let mut rng = crate::rng::rng(42);
        let w = Tensor::xavier(4, 4, &mut rng);
        let bias = Tensor::xavier(1, 4, &mut rng);
        let table = Tensor::xavier(6, 4, &mut rng);
        let x = Tensor::xavier(3, 4, &mut rng);

        let run = |w: &Tensor, bias: &Tensor, table: &Tensor| -> f64 {
            let mut t = Tape::new();
            let wp = t.param("w", w);
            let bp = t.param("b", bias);
            let tp = t.param("table", table);
            let xi = t.input(x.clone());
            let emb = t.gather(tp, &[1, 3, 1]);
            let cat = t.concat_rows(&[emb, xi]);
            let h = t.matmul(cat, wp);
            let h = t.add_row(h, bp);
            let h = t.tanh(h);
            let att = t.matmul_nt(h, cat);
            let att = t.scale(att, 0.5);
            let att = t.softmax_rows(att);
            let ctx = t.matmul(att, h);
            let ctx = t.mul_row(ctx, bp);
            let ctx = t.sigmoid(ctx);
            let first = t.slice_rows(ctx, 0, 1);
            let rest = t.slice_rows(ctx, 1, 3);
            let narrowed = t.slice_cols(rest, 0, 4);
            let restt = t.transpose(narrowed);
            let mix = t.matmul(first, restt);
            let ce = t.cross_entropy_row(mix, 1);
            let pool = t.mean_all(ctx);
            let bce = t.bce_logit(pool, 1.0);
            let both = t.concat_cols(&[ce, bce]);
            let loss = t.mean_all(both);
            t.value(loss).item()
        };

        let mut t = Tape::new();
        let wp = t.param("w", &w);
        let bp = t.param("b", &bias);
        let tp = t.param("table", &table);
        let xi = t.input(x.clone());
        let emb = t.gather(tp, &[1, 3, 1]);
        let cat = t.concat_rows(&[emb, xi]);
        let h = t.matmul(cat, wp);
        let h = t.add_row(h, bp);
        let h = t.tanh(h);
        let att = t.matmul_nt(h, cat);
        let att = t.scale(att, 0.5);
        let att = t.softmax_rows(att);
        let ctx = t.matmul(att, h);
        let ctx = t.mul_row(ctx, bp);
        let ctx = t.sigmoid(ctx);
        let first = t.slice_rows(ctx, 0, 1);
        let rest = t.slice_cols(ctx, 0, 2);
        let restt = t.transpose(rest);
        let mix = t.matmul(first, restt);
        let ce = t.cross_entropy_row(mix, 1);
        let pool = t.mean_all(ctx);
        let bce = t.bce_logit(pool, 1.0);
        let both = t.concat_cols(&[ce, bce]);
        let loss = t.mean_all(both);
        let grads = t.backward(loss);

        let eps = 1e-5;
        let mut checked = 0;
        for (name, tensor) in [("w", &w), ("b", &bias), ("table", &table)] {
            let analytic = &grads[name];
            let mut probe = tensor.clone();
            for idx in 0..tensor.len() {
                let fd = match name {
                    "w" => fd_grad(&mut probe, idx, eps, |p| run(p, &bias, &table)),
                    "b" => fd_grad(&mut probe, idx, eps, |p| run(&w, p, &table)),
                    _ => fd_grad(&mut probe, idx, eps, |p| run(&w, &bias, p)),
                };
                let a = analytic.data()[idx];
                let denom = a.abs().max(fd.abs()).max(1e-6);
                assert!(
                    (a - fd).abs() / denom < 1e-6,
                    "{name}[{idx}]: analytic {a} vs fd {fd}"
                );
                checked += 1;
            }
        }
        assert!(checked > 40);
    }

    #[test]
    fn unused_param_gets_no_gradient() {
        let w = Tensor::scalar(2.0);
        let mut t = Tape::new();
        let _unused = t.param("unused", &w);
        let a = t.param("a", &w);
        let loss = t.mean_all(a);
        let grads = t.backward(loss);
        assert!(grads.contains_key("a"));
        assert!(!grads.contains_key("unused"));
    }
}
