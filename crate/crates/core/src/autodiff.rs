//! Dense f64 tensors and a tape-based reverse-mode differentiator.
//!
//! The op set is what graph message passing and the balance losses need:
//! matrix products, row-bias adds, ReLU, embedding lookup, neighbor sums
//! over a compressed adjacency, per-segment pooling and masked log-softmax,
//! plus scalar arithmetic for the loss heads.

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.iter().product::<usize>() != values.len() {
            return Err(Error::Contract(format!(
                "shape {shape:?} does not match {} values",
                values.len()
            )));
        }
        Ok(Tensor { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor { shape, values: vec![0.0; len] }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor { shape: vec![1], values: vec![v] }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Tensor { shape: vec![values.len()], values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn rows_cols(&self) -> (usize, usize) {
        match self.shape.as_slice() {
            [n] => (*n, 1),
            [n, k] => (*n, *k),
            other => panic!("expected rank 1 or 2 tensor, got shape {other:?}"),
        }
    }
}

/// Compressed undirected adjacency over a (possibly batched) vertex set.
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub offsets: Vec<usize>,
    pub neighbors: Vec<usize>,
}

impl Adjacency {
    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// Contiguous row ranges `offsets[g]..offsets[g + 1]`, one per segment.
#[derive(Debug, Clone)]
pub struct Segments {
    pub offsets: Vec<usize>,
}

impl Segments {
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self, g: usize) -> std::ops::Range<usize> {
        self.offsets[g]..self.offsets[g + 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(usize),
    MatMul(Var, Var),
    AddRowBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddConst(Var),
    Relu(Var),
    ScaleOnePlus(Var, Var),
    Embed { table: Var, index: Rc<Vec<usize>> },
    NeighborSum { x: Var, adj: Rc<Adjacency> },
    SegmentSum { x: Var, seg: Rc<Segments> },
    SegmentLogSoftmax { x: Var, seg: Rc<Segments>, mask: Rc<Vec<bool>> },
    Gather { x: Var, index: Rc<Vec<usize>> },
    Square(Var),
    Sum(Var),
    Mean(Var),
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Parameter gradients, aligned with the parameter ids used in [`Tape::param`].
pub type Grads = Vec<Vec<f64>>;

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        let needs_grad = match &op {
            Op::Leaf => false,
            Op::Param(_) => true,
            Op::MatMul(a, b) | Op::AddRowBias(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => {
                self.ng(*a) || self.ng(*b)
            }
            Op::ScaleOnePlus(a, b) => self.ng(*a) || self.ng(*b),
            Op::Scale(a, _) | Op::AddConst(a) | Op::Relu(a) | Op::Square(a) | Op::Sum(a) | Op::Mean(a) => {
                self.ng(*a)
            }
            Op::Embed { table, .. } => self.ng(*table),
            Op::NeighborSum { x, .. }
            | Op::SegmentSum { x, .. }
            | Op::SegmentLogSoftmax { x, .. }
            | Op::Gather { x, .. } => self.ng(*x),
        };
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Constant input; no gradient flows into it.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    /// Trainable leaf bound to parameter slot `id`.
    pub fn param(&mut self, id: usize, t: &Tensor) -> Var {
        self.push(t.clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        let (n, m) = av.rows_cols();
        let (m2, k) = bv.rows_cols();
        assert_eq!(m, m2, "matmul inner dimension mismatch");
        let mut out = vec![0.0; n * k];
        for i in 0..n {
            let row = &mut out[i * k..(i + 1) * k];
            for p in 0..m {
                let a_ip = av.values[i * m + p];
                if a_ip == 0.0 {
                    continue;
                }
                let brow = &bv.values[p * k..(p + 1) * k];
                for (o, &b) in row.iter_mut().zip(brow) {
                    *o += a_ip * b;
                }
            }
        }
        self.push(Tensor { shape: vec![n, k], values: out }, Op::MatMul(a, b))
    }

    /// `x[n, k] + bias[k]` broadcast over rows.
    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Var {
        let xv = self.value(x);
        let (n, k) = xv.rows_cols();
        let bv = &self.value(bias).values;
        assert_eq!(bv.len(), k, "bias length mismatch");
        let mut out = xv.values.clone();
        for row in out.chunks_mut(k) {
            for (o, b) in row.iter_mut().zip(bv) {
                *o += b;
            }
        }
        self.push(Tensor { shape: vec![n, k], values: out }, Op::AddRowBias(x, bias))
    }

    fn zip_with(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.values.len(), bv.values.len(), "elementwise length mismatch");
        let values = av.values.iter().zip(&bv.values).map(|(&x, &y)| f(x, y)).collect();
        let shape = av.shape.clone();
        self.push(Tensor { shape, values }, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let xv = self.value(x);
        let t = Tensor { shape: xv.shape.clone(), values: xv.values.iter().map(|&v| f(v)).collect() };
        self.push(t, op)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.map(x, |v| v * c, Op::Scale(x, c))
    }

    pub fn add_const(&mut self, x: Var, c: &[f64]) -> Var {
        let xv = self.value(x);
        assert_eq!(xv.values.len(), c.len(), "constant length mismatch");
        let values = xv.values.iter().zip(c).map(|(a, b)| a + b).collect();
        let t = Tensor { shape: xv.shape.clone(), values };
        self.push(t, Op::AddConst(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, |v| v.max(0.0), Op::Relu(x))
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.map(x, |v| v * v, Op::Square(x))
    }

    /// `(1 + eps) * x` for a one-element `eps`.
    pub fn scale_one_plus(&mut self, x: Var, eps: Var) -> Var {
        let e = self.value(eps).values[0];
        self.map(x, |v| (1.0 + e) * v, Op::ScaleOnePlus(x, eps))
    }

    /// Rows of `table` selected by `index`.
    pub fn embed(&mut self, table: Var, index: Rc<Vec<usize>>) -> Var {
        let tv = self.value(table);
        let (_, k) = tv.rows_cols();
        let mut out = Vec::with_capacity(index.len() * k);
        for &i in index.iter() {
            out.extend_from_slice(&tv.values[i * k..(i + 1) * k]);
        }
        let t = Tensor { shape: vec![index.len(), k], values: out };
        self.push(t, Op::Embed { table, index })
    }

    /// `out[v] = sum over u in adj(v) of x[u]`.
    pub fn neighbor_sum(&mut self, x: Var, adj: Rc<Adjacency>) -> Var {
        let xv = self.value(x);
        let (n, k) = xv.rows_cols();
        assert_eq!(n, adj.num_vertices(), "adjacency size mismatch");
        let mut out = vec![0.0; n * k];
        for v in 0..n {
            let row = &mut out[v * k..(v + 1) * k];
            for &u in &adj.neighbors[adj.offsets[v]..adj.offsets[v + 1]] {
                for (o, &x) in row.iter_mut().zip(&xv.values[u * k..(u + 1) * k]) {
                    *o += x;
                }
            }
        }
        self.push(Tensor { shape: vec![n, k], values: out }, Op::NeighborSum { x, adj })
    }

    /// Sums rows within each segment: `[n, k] -> [segments, k]`.
    pub fn segment_sum(&mut self, x: Var, seg: Rc<Segments>) -> Var {
        let xv = self.value(x);
        let (_, k) = xv.rows_cols();
        let mut out = vec![0.0; seg.len() * k];
        for g in 0..seg.len() {
            for r in seg.range(g) {
                for c in 0..k {
                    out[g * k + c] += xv.values[r * k + c];
                }
            }
        }
        self.push(Tensor { shape: vec![seg.len(), k], values: out }, Op::SegmentSum { x, seg })
    }

    /// Log-softmax over the masked entries of each segment of a length-`n`
    /// vector; masked-out entries are `-inf`. Every segment needs at least one
    /// allowed entry.
    pub fn segment_log_softmax(&mut self, x: Var, seg: Rc<Segments>, mask: Rc<Vec<bool>>) -> Result<Var> {
        let xv = &self.value(x).values;
        if xv.len() != mask.len() {
            return Err(Error::Contract("mask length does not match logits".into()));
        }
        let mut out = vec![f64::NEG_INFINITY; xv.len()];
        for g in 0..seg.len() {
            let r = seg.range(g);
            let max = r.clone().filter(|&i| mask[i]).map(|i| xv[i]).fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return Err(Error::Contract(format!("segment {g} has no allowed entries")));
            }
            let sum: f64 = r.clone().filter(|&i| mask[i]).map(|i| (xv[i] - max).exp()).sum();
            let lse = max + sum.ln();
            for i in r.filter(|&i| mask[i]) {
                out[i] = xv[i] - lse;
            }
        }
        let n = out.len();
        Ok(self.push(Tensor { shape: vec![n], values: out }, Op::SegmentLogSoftmax { x, seg, mask }))
    }

    /// Flat gather: `out[j] = x[index[j]]`.
    pub fn gather(&mut self, x: Var, index: Rc<Vec<usize>>) -> Var {
        let xv = &self.value(x).values;
        let values: Vec<f64> = index.iter().map(|&i| xv[i]).collect();
        let t = Tensor::vector(values);
        self.push(t, Op::Gather { x, index })
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).values.iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = &self.value(x).values;
        let m = v.iter().sum::<f64>() / v.len() as f64;
        self.push(Tensor::scalar(m), Op::Mean(x))
    }

    /// Reverse sweep from a one-element `loss`. Returns one gradient buffer
    /// per parameter shape in `param_shapes`; parameters that the loss does not
    /// reach get zeros.
    pub fn backward(&self, loss: Var, param_shapes: &[&Tensor]) -> Result<Grads> {
        if self.value(loss).values.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);
        let mut out: Grads = param_shapes.iter().map(|t| vec![0.0; t.len()]).collect();

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => {
                    for (o, v) in out[*id].iter_mut().zip(&g) {
                        *o += v;
                    }
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (n, m) = av.rows_cols();
                    let (_, k) = bv.rows_cols();
                    if self.ng(*a) {
                        // da = g · bᵀ, accumulated row-wise so the inner loop vectorizes.
                        let mut bt = vec![0.0; k * m];
                        for p in 0..m {
                            for j in 0..k {
                                bt[j * m + p] = bv.values[p * k + j];
                            }
                        }
                        let mut da = vec![0.0; n * m];
                        for i in 0..n {
                            let drow = &mut da[i * m..(i + 1) * m];
                            for j in 0..k {
                                let gij = g[i * k + j];
                                if gij == 0.0 {
                                    continue;
                                }
                                for (d, &b) in drow.iter_mut().zip(&bt[j * m..(j + 1) * m]) {
                                    *d += gij * b;
                                }
                            }
                        }
                        accumulate(&mut grads, *a, da);
                    }
                    if self.ng(*b) {
                        let mut db = vec![0.0; m * k];
                        for i in 0..n {
                            let grow = &g[i * k..(i + 1) * k];
                            for p in 0..m {
                                let a_ip = av.values[i * m + p];
                                if a_ip == 0.0 {
                                    continue;
                                }
                                for (d, &gv) in db[p * k..(p + 1) * k].iter_mut().zip(grow) {
                                    *d += a_ip * gv;
                                }
                            }
                        }
                        accumulate(&mut grads, *b, db);
                    }
                }
                Op::AddRowBias(x, bias) => {
                    if self.ng(*bias) {
                        let k = self.value(*bias).values.len();
                        let mut db = vec![0.0; k];
                        for row in g.chunks(k) {
                            for (d, v) in db.iter_mut().zip(row) {
                                *d += v;
                            }
                        }
                        accumulate(&mut grads, *bias, db);
                    }
                    if self.ng(*x) {
                        accumulate(&mut grads, *x, g);
                    }
                }
                Op::Add(a, b) => {
                    if self.ng(*b) {
                        accumulate(&mut grads, *b, g.clone());
                    }
                    if self.ng(*a) {
                        accumulate(&mut grads, *a, g);
                    }
                }
                Op::Sub(a, b) => {
                    if self.ng(*b) {
                        accumulate(&mut grads, *b, g.iter().map(|v| -v).collect());
                    }
                    if self.ng(*a) {
                        accumulate(&mut grads, *a, g);
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.value(*a).values, &self.value(*b).values);
                    if self.ng(*a) {
                        accumulate(&mut grads, *a, g.iter().zip(bv).map(|(x, y)| x * y).collect());
                    }
                    if self.ng(*b) {
                        accumulate(&mut grads, *b, g.iter().zip(av).map(|(x, y)| x * y).collect());
                    }
                }
                Op::Scale(x, c) => accumulate(&mut grads, *x, g.iter().map(|v| v * c).collect()),
                Op::AddConst(x) => accumulate(&mut grads, *x, g),
                Op::Relu(x) => {
                    let xv = &self.value(*x).values;
                    let d = g.iter().zip(xv).map(|(gv, &v)| if v > 0.0 { *gv } else { 0.0 }).collect();
                    accumulate(&mut grads, *x, d);
                }
                Op::Square(x) => {
                    let xv = &self.value(*x).values;
                    accumulate(&mut grads, *x, g.iter().zip(xv).map(|(gv, v)| 2.0 * v * gv).collect());
                }
                Op::ScaleOnePlus(x, eps) => {
                    let xv = &self.value(*x).values;
                    let e = self.value(*eps).values[0];
                    if self.ng(*eps) {
                        let de: f64 = g.iter().zip(xv).map(|(a, b)| a * b).sum();
                        accumulate(&mut grads, *eps, vec![de]);
                    }
                    if self.ng(*x) {
                        accumulate(&mut grads, *x, g.iter().map(|v| v * (1.0 + e)).collect());
                    }
                }
                Op::Embed { table, index } => {
                    let tv = self.value(*table);
                    let (_, k) = tv.rows_cols();
                    let mut dt = vec![0.0; tv.values.len()];
                    for (r, &i) in index.iter().enumerate() {
                        for c in 0..k {
                            dt[i * k + c] += g[r * k + c];
                        }
                    }
                    accumulate(&mut grads, *table, dt);
                }
                Op::NeighborSum { x, adj } => {
                    // Symmetric adjacency: the transpose is the same operator.
                    let k = g.len() / adj.num_vertices().max(1);
                    let n = adj.num_vertices();
                    let mut dx = vec![0.0; n * k];
                    for v in 0..n {
                        let row = &mut dx[v * k..(v + 1) * k];
                        for &u in &adj.neighbors[adj.offsets[v]..adj.offsets[v + 1]] {
                            for (o, &x) in row.iter_mut().zip(&g[u * k..(u + 1) * k]) {
                                *o += x;
                            }
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::SegmentSum { x, seg } => {
                    let (n, k) = self.value(*x).rows_cols();
                    let mut dx = vec![0.0; n * k];
                    for s in 0..seg.len() {
                        for r in seg.range(s) {
                            dx[r * k..(r + 1) * k].copy_from_slice(&g[s * k..(s + 1) * k]);
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::SegmentLogSoftmax { x, seg, mask } => {
                    let y = &node.value.values;
                    let mut dx = vec![0.0; y.len()];
                    for s in 0..seg.len() {
                        let r = seg.range(s);
                        let gsum: f64 = r.clone().filter(|&i| mask[i]).map(|i| g[i]).sum();
                        for i in r.filter(|&i| mask[i]) {
                            dx[i] = g[i] - y[i].exp() * gsum;
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Gather { x, index } => {
                    let mut dx = vec![0.0; self.value(*x).values.len()];
                    for (j, &i) in index.iter().enumerate() {
                        dx[i] += g[j];
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Sum(x) => {
                    let n = self.value(*x).values.len();
                    accumulate(&mut grads, *x, vec![g[0]; n]);
                }
                Op::Mean(x) => {
                    let n = self.value(*x).values.len();
                    accumulate(&mut grads, *x, vec![g[0] / n as f64; n]);
                }
            }
        }
        Ok(out)
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], v: Var, d: Vec<f64>) {
    match &mut grads[v.0] {
        Some(existing) => {
            for (e, x) in existing.iter_mut().zip(d) {
                *e += x;
            }
        }
        slot @ None => *slot = Some(d),
    }
}
