//! Tape-based reverse-mode differentiation over small dense vectors.
//!
//! A [`Graph`] records every operation applied during one forward pass.
//! Parameters are referenced by [`ParamId`] and read from a borrowed
//! [`ParamStore`]; the store itself is never mutated by the tape, so a frozen
//! store can back any number of concurrent graphs. [`Graph::backward`] walks
//! the tape in reverse and returns a [`Gradients`] buffer that the caller
//! folds into the store with [`ParamStore::accumulate`].

use super::logsumexp;
use super::params::{Gradients, ParamId, ParamStore};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

#[derive(Clone, Debug)]
enum Op {
    Constant,
    ParamSlice {
        param: ParamId,
        offset: usize,
    },
    ParamGather {
        param: ParamId,
        indices: Vec<usize>,
    },
    Linear {
        w: ParamId,
        x: NodeId,
        b: Option<ParamId>,
    },
    Sum(Vec<NodeId>),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale {
        x: NodeId,
        s: NodeId,
    },
    ScaleConst {
        x: NodeId,
        factors: Vec<f64>,
    },
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Concat(Vec<NodeId>),
    Slice {
        x: NodeId,
        start: usize,
    },
    Gather {
        x: NodeId,
        indices: Vec<usize>,
    },
    LogSumExp(NodeId),
    SumAll(NodeId),
}

#[derive(Clone, Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

pub struct Graph<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Graph<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Graph {
            store,
            nodes: Vec::new(),
        }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    /// Value of a length-1 node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        self.nodes[id.0].value[0]
    }

    pub fn dim(&self, id: NodeId) -> usize {
        self.nodes[id.0].value.len()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Vec<f64>) -> NodeId {
        self.push(value, Op::Constant)
    }

    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.constant(vec![0.0; len])
    }

    /// Whole parameter as a flat vector.
    pub fn param(&mut self, param: ParamId) -> NodeId {
        let value = self.store.value(param).data().to_vec();
        self.push(value, Op::ParamSlice { param, offset: 0 })
    }

    /// Row `row` of a 2-d parameter (embedding lookup).
    pub fn param_row(&mut self, param: ParamId, row: usize) -> Result<NodeId> {
        let t = self.store.value(param);
        if row >= t.rows() {
            return Err(Error::config(format!(
                "row {row} out of range for `{}` with {} rows",
                self.store.param(param).name,
                t.rows()
            )));
        }
        let value = t.row(row).to_vec();
        let offset = row * t.cols();
        Ok(self.push(value, Op::ParamSlice { param, offset }))
    }

    /// Selected flat entries of a parameter.
    pub fn param_gather(&mut self, param: ParamId, indices: Vec<usize>) -> Result<NodeId> {
        let data = self.store.value(param).data();
        if let Some(&bad) = indices.iter().find(|&&i| i >= data.len()) {
            return Err(Error::config(format!(
                "index {bad} out of range for `{}`",
                self.store.param(param).name
            )));
        }
        let value = indices.iter().map(|&i| data[i]).collect();
        Ok(self.push(value, Op::ParamGather { param, indices }))
    }

    /// `w · x + b` with `w` stored row-major as `[out, in]`.
    pub fn linear(&mut self, w: ParamId, x: NodeId, b: Option<ParamId>) -> Result<NodeId> {
        let wt = self.store.value(w);
        let (rows, cols) = (wt.rows(), wt.cols());
        let xv = &self.nodes[x.0].value;
        if wt.shape().len() != 2 || cols != xv.len() {
            return Err(Error::config(format!(
                "linear `{}`: weight {:?} cannot multiply input of length {}",
                self.store.param(w).name,
                wt.shape(),
                xv.len()
            )));
        }
        let wd = wt.data();
        let mut out: Vec<f64> = (0..rows)
            .map(|r| {
                wd[r * cols..(r + 1) * cols]
                    .iter()
                    .zip(xv)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        if let Some(b) = b {
            let bd = self.store.value(b).data();
            if bd.len() != rows {
                return Err(Error::config(format!(
                    "linear bias `{}` has length {}, expected {rows}",
                    self.store.param(b).name,
                    bd.len()
                )));
            }
            out.iter_mut().zip(bd).for_each(|(o, v)| *o += v);
        }
        Ok(self.push(out, Op::Linear { w, x, b }))
    }

    fn same_len(&self, a: NodeId, b: NodeId, what: &str) -> Result<()> {
        let (la, lb) = (self.dim(a), self.dim(b));
        if la != lb {
            return Err(Error::config(format!("{what}: length {la} vs {lb}")));
        }
        Ok(())
    }

    pub fn sum(&mut self, xs: &[NodeId]) -> Result<NodeId> {
        let Some(&first) = xs.first() else {
            return Err(Error::invalid("sum of zero nodes"));
        };
        let mut out = self.value(first).to_vec();
        for &x in &xs[1..] {
            self.same_len(first, x, "sum")?;
            out.iter_mut()
                .zip(&self.nodes[x.0].value)
                .for_each(|(o, v)| *o += v);
        }
        Ok(self.push(out, Op::Sum(xs.to_vec())))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.sum(&[a, b])
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b, "sub")?;
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x - y)
            .collect();
        Ok(self.push(out, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b, "mul")?;
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .collect();
        Ok(self.push(out, Op::Mul(a, b)))
    }

    /// Vector times a length-1 node.
    pub fn scale(&mut self, x: NodeId, s: NodeId) -> Result<NodeId> {
        if self.dim(s) != 1 {
            return Err(Error::config("scale factor must be a scalar node"));
        }
        let k = self.scalar(s);
        let out = self.value(x).iter().map(|v| v * k).collect();
        Ok(self.push(out, Op::Scale { x, s }))
    }

    /// Elementwise product with fixed factors (dropout masks).
    pub fn scale_const(&mut self, x: NodeId, factors: Vec<f64>) -> Result<NodeId> {
        if factors.len() != self.dim(x) {
            return Err(Error::config("scale_const: factor length mismatch"));
        }
        let out = self
            .value(x)
            .iter()
            .zip(&factors)
            .map(|(v, f)| v * f)
            .collect();
        Ok(self.push(out, Op::ScaleConst { x, factors }))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let out = self.value(x).iter().map(|&v| sigmoid(v)).collect();
        self.push(out, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let out = self.value(x).iter().map(|v| v.tanh()).collect();
        self.push(out, Op::Tanh(x))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let out = self.value(x).iter().map(|&v| v.max(0.0)).collect();
        self.push(out, Op::Relu(x))
    }

    pub fn concat(&mut self, xs: &[NodeId]) -> NodeId {
        let mut out = Vec::with_capacity(xs.iter().map(|&x| self.dim(x)).sum());
        for &x in xs {
            out.extend_from_slice(&self.nodes[x.0].value);
        }
        self.push(out, Op::Concat(xs.to_vec()))
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        if start + len > self.dim(x) {
            return Err(Error::config(format!(
                "slice {start}..{} out of range for length {}",
                start + len,
                self.dim(x)
            )));
        }
        let out = self.value(x)[start..start + len].to_vec();
        Ok(self.push(out, Op::Slice { x, start }))
    }

    pub fn gather(&mut self, x: NodeId, indices: Vec<usize>) -> Result<NodeId> {
        let v = self.value(x);
        if let Some(&bad) = indices.iter().find(|&&i| i >= v.len()) {
            return Err(Error::config(format!("gather index {bad} out of range")));
        }
        let out = indices.iter().map(|&i| v[i]).collect();
        Ok(self.push(out, Op::Gather { x, indices }))
    }

    pub fn pick(&mut self, x: NodeId, index: usize) -> Result<NodeId> {
        self.gather(x, vec![index])
    }

    /// Max-shifted `log Σ exp(x_i)` as a length-1 node.
    pub fn logsumexp(&mut self, x: NodeId) -> Result<NodeId> {
        if self.dim(x) == 0 {
            return Err(Error::invalid("logsumexp of an empty vector"));
        }
        let out = vec![logsumexp(self.value(x))];
        Ok(self.push(out, Op::LogSumExp(x)))
    }

    /// Sum of all entries as a length-1 node.
    pub fn sum_all(&mut self, x: NodeId) -> NodeId {
        let out = vec![self.value(x).iter().sum()];
        self.push(out, Op::SumAll(x))
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        if self.dim(root) != 1 {
            return Err(Error::invalid("backward root must be a scalar node"));
        }
        let mut grads: Vec<Vec<f64>> = vec![Vec::new(); self.nodes.len()];
        let mut pgrads: Vec<Option<Vec<f64>>> = vec![None; self.store.len()];
        grads[root.0] = vec![1.0];

        for idx in (0..=root.0).rev() {
            if grads[idx].is_empty() {
                continue;
            }
            let g = std::mem::take(&mut grads[idx]);
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::ParamSlice { param, offset } => {
                    if let Some(buf) = self.param_grad(&mut pgrads, *param) {
                        buf[*offset..*offset + g.len()]
                            .iter_mut()
                            .zip(&g)
                            .for_each(|(a, v)| *a += v);
                    }
                }
                Op::ParamGather { param, indices } => {
                    if let Some(buf) = self.param_grad(&mut pgrads, *param) {
                        for (&i, v) in indices.iter().zip(&g) {
                            buf[i] += v;
                        }
                    }
                }
                Op::Linear { w, x, b } => {
                    let wt = self.store.value(*w);
                    let cols = wt.cols();
                    let xv = &self.nodes[x.0].value;
                    {
                        let gx = acc(&mut grads, *x, cols);
                        let wd = wt.data();
                        for (r, gr) in g.iter().enumerate() {
                            if *gr == 0.0 {
                                continue;
                            }
                            let row = &wd[r * cols..(r + 1) * cols];
                            gx.iter_mut().zip(row).for_each(|(a, w)| *a += gr * w);
                        }
                    }
                    if let Some(buf) = self.param_grad(&mut pgrads, *w) {
                        for (r, gr) in g.iter().enumerate() {
                            if *gr == 0.0 {
                                continue;
                            }
                            buf[r * cols..(r + 1) * cols]
                                .iter_mut()
                                .zip(xv)
                                .for_each(|(a, xv)| *a += gr * xv);
                        }
                    }
                    if let Some(b) = b {
                        if let Some(buf) = self.param_grad(&mut pgrads, *b) {
                            buf.iter_mut().zip(&g).for_each(|(a, v)| *a += v);
                        }
                    }
                }
                Op::Sum(xs) => {
                    for &x in xs {
                        add_into(acc(&mut grads, x, g.len()), &g);
                    }
                }
                Op::Sub(a, b) => {
                    add_into(acc(&mut grads, *a, g.len()), &g);
                    let gb = acc(&mut grads, *b, g.len());
                    gb.iter_mut().zip(&g).for_each(|(o, v)| *o -= v);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gv), y) in ga.iter_mut().zip(&g).zip(bv) {
                        *o += gv * y;
                    }
                    let gb = acc(&mut grads, *b, g.len());
                    for ((o, gv), x) in gb.iter_mut().zip(&g).zip(av) {
                        *o += gv * x;
                    }
                }
                Op::Scale { x, s } => {
                    let k = self.nodes[s.0].value[0];
                    let xv = &self.nodes[x.0].value;
                    let dot: f64 = g.iter().zip(xv).map(|(a, b)| a * b).sum();
                    let gx = acc(&mut grads, *x, g.len());
                    gx.iter_mut().zip(&g).for_each(|(o, v)| *o += v * k);
                    acc(&mut grads, *s, 1)[0] += dot;
                }
                Op::ScaleConst { x, factors } => {
                    let gx = acc(&mut grads, *x, g.len());
                    for ((o, v), f) in gx.iter_mut().zip(&g).zip(factors) {
                        *o += v * f;
                    }
                }
                Op::Sigmoid(x) => {
                    let y = &node.value;
                    let gx = acc(&mut grads, *x, g.len());
                    for ((o, v), y) in gx.iter_mut().zip(&g).zip(y) {
                        *o += v * y * (1.0 - y);
                    }
                }
                Op::Tanh(x) => {
                    let y = &node.value;
                    let gx = acc(&mut grads, *x, g.len());
                    for ((o, v), y) in gx.iter_mut().zip(&g).zip(y) {
                        *o += v * (1.0 - y * y);
                    }
                }
                Op::Relu(x) => {
                    let y = &node.value;
                    let gx = acc(&mut grads, *x, g.len());
                    for ((o, v), y) in gx.iter_mut().zip(&g).zip(y) {
                        if *y > 0.0 {
                            *o += v;
                        }
                    }
                }
                Op::Concat(xs) => {
                    let mut off = 0;
                    for &x in xs {
                        let n = self.nodes[x.0].value.len();
                        add_into(acc(&mut grads, x, n), &g[off..off + n]);
                        off += n;
                    }
                }
                Op::Slice { x, start } => {
                    let n = self.nodes[x.0].value.len();
                    let gx = acc(&mut grads, *x, n);
                    add_into(&mut gx[*start..*start + g.len()], &g);
                }
                Op::Gather { x, indices } => {
                    let n = self.nodes[x.0].value.len();
                    let gx = acc(&mut grads, *x, n);
                    for (&i, v) in indices.iter().zip(&g) {
                        gx[i] += v;
                    }
                }
                Op::LogSumExp(x) => {
                    let out = node.value[0];
                    let xv = &self.nodes[x.0].value;
                    let gx = acc(&mut grads, *x, xv.len());
                    if out.is_finite() {
                        for (o, v) in gx.iter_mut().zip(xv) {
                            *o += g[0] * (v - out).exp();
                        }
                    }
                }
                Op::SumAll(x) => {
                    let n = self.nodes[x.0].value.len();
                    acc(&mut grads, *x, n).iter_mut().for_each(|o| *o += g[0]);
                }
            }
            grads[idx] = g;
        }
        Ok(Gradients {
            params: pgrads,
            nodes: grads,
        })
    }

    fn param_grad<'a>(
        &self,
        pgrads: &'a mut [Option<Vec<f64>>],
        id: ParamId,
    ) -> Option<&'a mut Vec<f64>> {
        let p = self.store.param(id);
        if !p.trainable {
            return None;
        }
        Some(pgrads[id.0].get_or_insert_with(|| vec![0.0; p.value.len()]))
    }
}

fn acc(grads: &mut [Vec<f64>], id: NodeId, len: usize) -> &mut Vec<f64> {
    let g = &mut grads[id.0];
    if g.is_empty() {
        *g = vec![0.0; len];
    }
    g
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
}
