use std::collections::HashMap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{matmul_at, matmul_bt, matmul_raw, ParamId, ParameterStore, Precision, Tensor, TensorError};

/// A value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Concat(Vec<Var>),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    SegmentLogSoftmax(Var, Rc<[usize]>),
    SegmentSum(Var, Rc<[usize]>),
    GatherRows(Var, Rc<[usize]>),
    Select(Var, Rc<[usize]>),
    Reshape(Var),
    SumAll(Var),
    Masked(Var, Rc<[bool]>),
    Dropout(Var, Rc<[f64]>),
    Im2Col {
        input: Var,
        segments: Rc<[(usize, usize)]>,
        kernel: usize,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Parameter gradients produced by [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    per_param: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn per_param(&self) -> &[Option<Vec<f64>>] {
        &self.per_param
    }

    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.per_param[id.0].as_deref()
    }
}

/// Records operations for one forward pass and differentiates them.
pub struct Tape<'s> {
    store: &'s ParameterStore,
    nodes: Vec<Node>,
    params: HashMap<usize, Var>,
    training: bool,
    rng: ChaCha8Rng,
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::Shape {
        op,
        lhs: a.shape(),
        rhs: b.shape(),
    }
}

impl<'s> Tape<'s> {
    /// `training` enables dropout; `seed` drives the dropout masks.
    pub fn new(store: &'s ParameterStore, training: bool, seed: u64) -> Tape<'s> {
        Tape {
            store,
            nodes: Vec::new(),
            params: HashMap::new(),
            training,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn precision(&self) -> Precision {
        self.store.precision()
    }

    fn push(&mut self, mut value: Tensor, op: Op) -> Var {
        self.store.precision().round_all(value.data_mut());
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> [usize; 2] {
        self.nodes[v.0].value.shape()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A constant input; receives no gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id.0) {
            return v;
        }
        let v = self.push(self.store.value(id).clone(), Op::Param(id.0));
        self.params.insert(id.0, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols() != y.rows() {
            return Err(shape_err("matmul", x, y));
        }
        let out = matmul_raw(x.data(), x.rows(), x.cols(), y.data(), y.cols());
        let t = Tensor::new(x.rows(), y.cols(), out)?;
        Ok(self.push(t, Op::MatMul(a, b)))
    }

    fn zip(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor, TensorError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err(op, x, y));
        }
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| f(p, q)).collect();
        Tensor::new(x.rows(), x.cols(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let t = self.zip("add", a, b, |p, q| p + q)?;
        Ok(self.push(t, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let t = self.zip("sub", a, b, |p, q| p - q)?;
        Ok(self.push(t, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let t = self.zip("mul", a, b, |p, q| p * q)?;
        Ok(self.push(t, Op::Mul(a, b)))
    }

    /// Add a `1 × m` row to every row of an `n × m` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, TensorError> {
        let (x, r) = (self.value(a), self.value(row));
        if r.rows() != 1 || r.cols() != x.cols() {
            return Err(shape_err("add_row", x, r));
        }
        let m = x.cols();
        let data = x
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| v + r.data()[i % m.max(1)])
            .collect();
        let t = Tensor::new(x.rows(), m, data)?;
        Ok(self.push(t, Op::AddRow(a, row)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let x = self.value(a);
        let t = Tensor::new(x.rows(), x.cols(), x.data().iter().map(|v| v * c).collect()).unwrap();
        self.push(t, Op::Scale(a, c))
    }

    /// `x · W + b` with `b` a `1 × out` row.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var, TensorError> {
        let h = self.matmul(x, w)?;
        self.add_row(h, b)
    }

    /// Concatenate along columns; all inputs need the same row count.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let rows = self.value(parts[0]).rows();
        for &p in parts {
            if self.value(p).rows() != rows {
                return Err(shape_err("concat", self.value(parts[0]), self.value(p)));
            }
        }
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        let t = Tensor::new(rows, cols, data)?;
        Ok(self.push(t, Op::Concat(parts.to_vec())))
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let x = self.value(a);
        let t = Tensor::new(x.rows(), x.cols(), x.data().iter().map(|&v| f(v)).collect()).unwrap();
        self.push(t, op)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, |v| v.max(0.0), Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, f64::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(
            a,
            |v| {
                if v >= 0.0 {
                    1.0 / (1.0 + (-v).exp())
                } else {
                    let e = v.exp();
                    e / (1.0 + e)
                }
            },
            Op::Sigmoid(a),
        )
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut data = x.data().to_vec();
        for row in data.chunks_mut(x.cols().max(1)) {
            let lse = log_sum_exp(row.iter().copied());
            row.iter_mut().for_each(|v| *v = (*v - lse).exp());
        }
        let t = Tensor::new(x.rows(), x.cols(), data).unwrap();
        self.push(t, Op::SoftmaxRows(a))
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut data = x.data().to_vec();
        for row in data.chunks_mut(x.cols().max(1)) {
            let lse = log_sum_exp(row.iter().copied());
            row.iter_mut().for_each(|v| *v -= lse);
        }
        let t = Tensor::new(x.rows(), x.cols(), data).unwrap();
        self.push(t, Op::LogSoftmaxRows(a))
    }

    /// Log-softmax of a column vector within groups given by `ids`.
    pub fn segment_log_softmax(&mut self, a: Var, ids: &[usize], num_segments: usize) -> Result<Var, TensorError> {
        let x = self.value(a);
        if x.cols() != 1 || ids.len() != x.rows() {
            return Err(shape_err("segment_log_softmax", x, &Tensor::zeros(ids.len(), 1)));
        }
        check_ids("segment_log_softmax", ids, num_segments)?;
        let lse = segment_lse(x.data(), ids, num_segments);
        let data = x.data().iter().zip(ids).map(|(&v, &s)| v - lse[s]).collect();
        let t = Tensor::new(x.rows(), 1, data)?;
        Ok(self.push(t, Op::SegmentLogSoftmax(a, ids.into())))
    }

    /// Sum rows into `num_segments` groups: row `i` goes to `ids[i]`.
    pub fn segment_sum(&mut self, a: Var, ids: &[usize], num_segments: usize) -> Result<Var, TensorError> {
        let x = self.value(a);
        if ids.len() != x.rows() {
            return Err(shape_err("segment_sum", x, &Tensor::zeros(ids.len(), 1)));
        }
        check_ids("segment_sum", ids, num_segments)?;
        let m = x.cols();
        let mut data = vec![0.0; num_segments * m];
        for (i, &s) in ids.iter().enumerate() {
            for (o, v) in data[s * m..(s + 1) * m].iter_mut().zip(x.row_slice(i)) {
                *o += v;
            }
        }
        let t = Tensor::new(num_segments, m, data)?;
        Ok(self.push(t, Op::SegmentSum(a, ids.into())))
    }

    /// Rows `idx[0], idx[1], ...` of `a`.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let x = self.value(a);
        check_ids("gather_rows", idx, x.rows())?;
        let mut data = Vec::with_capacity(idx.len() * x.cols());
        for &i in idx {
            data.extend_from_slice(x.row_slice(i));
        }
        let t = Tensor::new(idx.len(), x.cols(), data)?;
        Ok(self.push(t, Op::GatherRows(a, idx.into())))
    }

    /// Embedding lookup: rows of a parameter table.
    pub fn embedding(&mut self, table: ParamId, idx: &[usize]) -> Result<Var, TensorError> {
        let t = self.param(table);
        self.gather_rows(t, idx)
    }

    /// Elements at row-major flat positions, as a column vector.
    pub fn select(&mut self, a: Var, flat: &[usize]) -> Result<Var, TensorError> {
        let x = self.value(a);
        check_ids("select", flat, x.data().len())?;
        let data = flat.iter().map(|&i| x.data()[i]).collect();
        Ok(self.push(Tensor::column(data), Op::Select(a, flat.into())))
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var, TensorError> {
        let x = self.value(a);
        if rows * cols != x.data().len() {
            return Err(shape_err("reshape", x, &Tensor::zeros(rows, cols)));
        }
        let t = Tensor::new(rows, cols, x.data().to_vec())?;
        Ok(self.push(t, Op::Reshape(a)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::SumAll(a))
    }

    /// Set entries where `mask` is true to negative infinity.
    pub fn mask_fill(&mut self, a: Var, mask: &[bool]) -> Result<Var, TensorError> {
        let x = self.value(a);
        if mask.len() != x.data().len() {
            return Err(shape_err("mask_fill", x, &Tensor::zeros(mask.len(), 1)));
        }
        let data = x
            .data()
            .iter()
            .zip(mask)
            .map(|(&v, &m)| if m { f64::NEG_INFINITY } else { v })
            .collect();
        let t = Tensor::new(x.rows(), x.cols(), data)?;
        Ok(self.push(t, Op::Masked(a, mask.into())))
    }

    /// Inverted dropout; identity unless the tape is in training mode.
    pub fn dropout(&mut self, a: Var, p: f64) -> Var {
        if !self.training || p <= 0.0 {
            return a;
        }
        let n = self.value(a).data().len();
        let keep = 1.0 - p;
        let mask: Vec<f64> = (0..n)
            .map(|_| if self.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let x = self.value(a);
        let data = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let t = Tensor::new(x.rows(), x.cols(), data).unwrap();
        self.push(t, Op::Dropout(a, mask.into()))
    }

    /// Sliding windows of `kernel` rows centred on each row, zero-padded at
    /// segment borders so no window crosses between segments. Output row `i`
    /// holds the window's rows side by side.
    pub fn im2col(&mut self, a: Var, segments: &[(usize, usize)], kernel: usize) -> Result<Var, TensorError> {
        let x = self.value(a);
        let covered: usize = segments.iter().map(|s| s.1).sum();
        if covered != x.rows() || kernel.is_multiple_of(2) {
            return Err(shape_err("im2col", x, &Tensor::zeros(covered, kernel)));
        }
        let c = x.cols();
        let pad = kernel / 2;
        let mut data = vec![0.0; x.rows() * kernel * c];
        for &(start, len) in segments {
            for p in 0..len {
                let row = start + p;
                for t in 0..kernel {
                    let src = p + t;
                    if src < pad || src - pad >= len {
                        continue;
                    }
                    let from = x.row_slice(start + src - pad);
                    let at = row * kernel * c + t * c;
                    data[at..at + c].copy_from_slice(from);
                }
            }
        }
        let t = Tensor::new(x.rows(), kernel * c, data)?;
        Ok(self.push(
            t,
            Op::Im2Col {
                input: a,
                segments: segments.into(),
                kernel,
            },
        ))
    }

    /// Same-padded 1-D convolution over rows within each segment. `w` is
    /// `(kernel · in) × out`, `b` is `1 × out`.
    pub fn conv1d(&mut self, a: Var, w: Var, b: Var, segments: &[(usize, usize)], kernel: usize) -> Result<Var, TensorError> {
        let cols = self.im2col(a, segments, kernel)?;
        self.linear(cols, w, b)
    }

    /// Sum over rows of `-log_softmax(logits)[row, target]`, skipping rows
    /// whose target is `None`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[Option<usize>]) -> Result<Var, TensorError> {
        let [rows, cols] = self.shape(logits);
        if targets.len() != rows {
            return Err(shape_err("cross_entropy", self.value(logits), &Tensor::zeros(targets.len(), 1)));
        }
        let logp = self.log_softmax_rows(logits);
        let mut flat = Vec::new();
        for (r, t) in targets.iter().enumerate() {
            if let Some(t) = *t {
                if t >= cols {
                    return Err(TensorError::Index {
                        op: "cross_entropy",
                        index: t,
                        len: cols,
                    });
                }
                flat.push(r * cols + t);
            }
        }
        let picked = self.select(logp, &flat)?;
        let s = self.sum(picked);
        Ok(self.scale(s, -1.0))
    }

    /// Reverse pass from a scalar.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let shape = self.shape(loss);
        if shape != [1, 1] {
            return Err(TensorError::NonScalarLoss(shape));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);
        let mut per_param = vec![None; self.store.len()];
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let out = &node.value;
            let acc = |v: Var, delta: Vec<f64>, grads: &mut Vec<Option<Vec<f64>>>| match &mut grads[v.0] {
                Some(existing) => existing.iter_mut().zip(delta).for_each(|(a, b)| *a += b),
                slot @ None => *slot = Some(delta),
            };
            match &node.op {
                Op::Leaf => {}
                Op::Param(p) => per_param[*p] = Some(g),
                Op::MatMul(a, b) => {
                    let (x, y) = (self.value(*a), self.value(*b));
                    let (n, k, m) = (x.rows(), x.cols(), y.cols());
                    acc(*a, matmul_bt(&g, n, m, y.data(), k), &mut grads);
                    acc(*b, matmul_at(x.data(), n, k, &g, m), &mut grads);
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone(), &mut grads);
                    acc(*b, g, &mut grads);
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone(), &mut grads);
                    acc(*b, g.iter().map(|v| -v).collect(), &mut grads);
                }
                Op::Mul(a, b) => {
                    let (x, y) = (self.value(*a).data(), self.value(*b).data());
                    acc(*a, g.iter().zip(y).map(|(g, y)| g * y).collect(), &mut grads);
                    acc(*b, g.iter().zip(x).map(|(g, x)| g * x).collect(), &mut grads);
                }
                Op::AddRow(a, row) => {
                    let m = out.cols();
                    let mut gr = vec![0.0; m];
                    for chunk in g.chunks(m.max(1)) {
                        gr.iter_mut().zip(chunk).for_each(|(a, b)| *a += b);
                    }
                    acc(*a, g, &mut grads);
                    acc(*row, gr, &mut grads);
                }
                Op::Scale(a, c) => acc(*a, g.iter().map(|v| v * c).collect(), &mut grads),
                Op::Concat(parts) => {
                    let total = out.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.value(p).cols();
                        let mut d = Vec::with_capacity(out.rows() * w);
                        for r in 0..out.rows() {
                            d.extend_from_slice(&g[r * total + offset..r * total + offset + w]);
                        }
                        acc(p, d, &mut grads);
                        offset += w;
                    }
                }
                Op::Relu(a) => acc(
                    *a,
                    g.iter().zip(out.data()).map(|(g, &o)| if o > 0.0 { *g } else { 0.0 }).collect(),
                    &mut grads,
                ),
                Op::Tanh(a) => acc(*a, g.iter().zip(out.data()).map(|(g, o)| g * (1.0 - o * o)).collect(), &mut grads),
                Op::Sigmoid(a) => acc(*a, g.iter().zip(out.data()).map(|(g, o)| g * o * (1.0 - o)).collect(), &mut grads),
                Op::SoftmaxRows(a) => {
                    let m = out.cols().max(1);
                    let mut d = vec![0.0; g.len()];
                    for ((dr, gr), sr) in d.chunks_mut(m).zip(g.chunks(m)).zip(out.data().chunks(m)) {
                        let dot: f64 = gr.iter().zip(sr).map(|(g, s)| g * s).sum();
                        for j in 0..gr.len() {
                            dr[j] = sr[j] * (gr[j] - dot);
                        }
                    }
                    acc(*a, d, &mut grads);
                }
                Op::LogSoftmaxRows(a) => {
                    let m = out.cols().max(1);
                    let mut d = vec![0.0; g.len()];
                    for ((dr, gr), lr) in d.chunks_mut(m).zip(g.chunks(m)).zip(out.data().chunks(m)) {
                        let total: f64 = gr.iter().sum();
                        for j in 0..gr.len() {
                            dr[j] = gr[j] - lr[j].exp() * total;
                        }
                    }
                    acc(*a, d, &mut grads);
                }
                Op::SegmentLogSoftmax(a, ids) => {
                    let nseg = ids.iter().max().map_or(0, |m| m + 1);
                    let mut totals = vec![0.0; nseg];
                    for (gv, &s) in g.iter().zip(ids.iter()) {
                        totals[s] += gv;
                    }
                    let d = g
                        .iter()
                        .zip(out.data())
                        .zip(ids.iter())
                        .map(|((gv, lv), &s)| gv - lv.exp() * totals[s])
                        .collect();
                    acc(*a, d, &mut grads);
                }
                Op::SegmentSum(a, ids) => {
                    let m = out.cols();
                    let mut d = Vec::with_capacity(ids.len() * m);
                    for &s in ids.iter() {
                        d.extend_from_slice(&g[s * m..(s + 1) * m]);
                    }
                    acc(*a, d, &mut grads);
                }
                Op::GatherRows(a, idx) => {
                    let x = self.value(*a);
                    let m = x.cols();
                    let mut d = vec![0.0; x.data().len()];
                    for (r, &i) in idx.iter().enumerate() {
                        d[i * m..(i + 1) * m]
                            .iter_mut()
                            .zip(&g[r * m..(r + 1) * m])
                            .for_each(|(a, b)| *a += b);
                    }
                    acc(*a, d, &mut grads);
                }
                Op::Select(a, flat) => {
                    let mut d = vec![0.0; self.value(*a).data().len()];
                    for (gv, &i) in g.iter().zip(flat.iter()) {
                        d[i] += gv;
                    }
                    acc(*a, d, &mut grads);
                }
                Op::Reshape(a) => acc(*a, g, &mut grads),
                Op::SumAll(a) => {
                    let n = self.value(*a).data().len();
                    acc(*a, vec![g[0]; n], &mut grads);
                }
                Op::Masked(a, mask) => acc(
                    *a,
                    g.iter().zip(mask.iter()).map(|(g, &m)| if m { 0.0 } else { *g }).collect(),
                    &mut grads,
                ),
                Op::Dropout(a, mask) => acc(*a, g.iter().zip(mask.iter()).map(|(g, m)| g * m).collect(), &mut grads),
                Op::Im2Col { input, segments, kernel } => {
                    let x = self.value(*input);
                    let c = x.cols();
                    let pad = kernel / 2;
                    let mut d = vec![0.0; x.data().len()];
                    for &(start, len) in segments.iter() {
                        for p in 0..len {
                            let row = start + p;
                            for t in 0..*kernel {
                                let src = p + t;
                                if src < pad || src - pad >= len {
                                    continue;
                                }
                                let to = (start + src - pad) * c;
                                let at = row * kernel * c + t * c;
                                d[to..to + c].iter_mut().zip(&g[at..at + c]).for_each(|(a, b)| *a += b);
                            }
                        }
                    }
                    acc(*input, d, &mut grads);
                }
            }
        }
        Ok(Gradients { per_param })
    }
}

fn check_ids(op: &'static str, ids: &[usize], len: usize) -> Result<(), TensorError> {
    match ids.iter().find(|&&i| i >= len) {
        Some(&index) => Err(TensorError::Index { op, index, len }),
        None => Ok(()),
    }
}

/// Numerically stable `ln Σ exp(x)`; negative infinity for an empty or fully
/// masked input.
pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn segment_lse(values: &[f64], ids: &[usize], n: usize) -> Vec<f64> {
    let mut max = vec![f64::NEG_INFINITY; n];
    for (&v, &s) in values.iter().zip(ids) {
        max[s] = max[s].max(v);
    }
    let mut sum = vec![0.0; n];
    for (&v, &s) in values.iter().zip(ids) {
        if max[s] > f64::NEG_INFINITY {
            sum[s] += (v - max[s]).exp();
        }
    }
    (0..n)
        .map(|s| if max[s] == f64::NEG_INFINITY { max[s] } else { max[s] + sum[s].ln() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> ParameterStore {
        ParameterStore::new(Precision::F64)
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let s = store();
        let mut t = Tape::new(&s, false, 0);
        let x = t.constant(Tensor::row(vec![0.0; 3]));
        let y = t.softmax_rows(x);
        for &v in t.value(y).data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn segment_sum_definition() {
        let s = store();
        let mut t = Tape::new(&s, false, 0);
        let x = t.constant(Tensor::column(vec![1.0, 2.0, 3.0]));
        let y = t.segment_sum(x, &[0, 0, 1], 2).unwrap();
        assert_eq!(t.value(y).data(), &[3.0, 3.0]);
        assert!(t.segment_sum(x, &[0, 0, 2], 2).is_err());
    }

    #[test]
    fn identity_kernel_convolution() {
        let mut s = store();
        let mut w = vec![0.0; 3 * 2 * 2];
        // centre tap maps channel c to channel c
        w[2 * 2] = 1.0;
        w[3 * 2 + 1] = 1.0;
        let wid = s.add("w", Tensor::new(6, 2, w).unwrap()).unwrap();
        let bid = s.add_zeros("b", 1, 2).unwrap();
        let mut t = Tape::new(&s, false, 0);
        let x = t.constant(Tensor::new(4, 2, (0..8).map(f64::from).collect()).unwrap());
        let (w, b) = (t.param(wid), t.param(bid));
        let y = t.conv1d(x, w, b, &[(0, 3), (3, 1)], 3).unwrap();
        assert_eq!(t.value(y), t.value(x));
    }

    #[test]
    fn gradients_of_simple_losses() {
        let mut s = store();
        let w = s.add("w", Tensor::new(2, 2, vec![1.0, -2.0, 3.0, 0.5]).unwrap()).unwrap();
        let mut t = Tape::new(&s, false, 0);
        let v = t.param(w);
        let l = t.sum(v);
        assert_eq!(t.backward(l).unwrap().get(w).unwrap(), &[1.0; 4]);
        let mut t = Tape::new(&s, false, 0);
        let v = t.param(w);
        let sq = t.mul(v, v).unwrap();
        let total = t.sum(sq);
        let l = t.scale(total, 0.5);
        assert_eq!(t.backward(l).unwrap().get(w).unwrap(), s.value(w).data());
    }

    #[test]
    fn unreachable_parameters_get_no_gradient() {
        let mut s = store();
        let a = s.add_zeros("a", 1, 1).unwrap();
        let b = s.add_zeros("b", 1, 1).unwrap();
        let mut t = Tape::new(&s, false, 0);
        let x = t.param(a);
        let _unused = t.param(b);
        let l = t.sum(x);
        let g = t.backward(l).unwrap();
        assert!(g.get(b).is_none());
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let s = store();
        let mut t = Tape::new(&s, false, 0);
        let x = t.constant(Tensor::row(vec![1.0, 2.0]));
        assert!(matches!(t.backward(x), Err(TensorError::NonScalarLoss([1, 2]))));
    }

    #[test]
    fn shape_errors_name_the_op() {
        let s = store();
        let mut t = Tape::new(&s, false, 0);
        let a = t.constant(Tensor::zeros(2, 3));
        let b = t.constant(Tensor::zeros(2, 3));
        let e = t.matmul(a, b).unwrap_err();
        assert_eq!(e.to_string(), "matmul: incompatible shapes [2, 3] and [2, 3]");
    }

    #[test]
    fn dropout_only_in_training() {
        let s = store();
        let mut t = Tape::new(&s, false, 0);
        let x = t.constant(Tensor::row(vec![1.0; 100]));
        assert_eq!(t.dropout(x, 0.5), x);
        let mut t = Tape::new(&s, true, 0);
        let x = t.constant(Tensor::row(vec![1.0; 100]));
        let y = t.dropout(x, 0.5);
        assert!(t.value(y).data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn large_logits_stay_finite() {
        let s = store();
        let mut t = Tape::new(&s, false, 0);
        let x = t.constant(Tensor::new(2, 3, vec![1e4, -1e4, 0.0, -1e4, -1e4, 1e4]).unwrap());
        let l = t.cross_entropy(x, &[Some(0), Some(0)]).unwrap();
        let v = t.value(l).item();
        assert!(v.is_finite());
        assert!((v - 2e4).abs() < 1e-6);
    }

    #[test]
    fn masked_entries_have_zero_probability() {
        let s = store();
        let mut t = Tape::new(&s, false, 0);
        let x = t.constant(Tensor::row(vec![1.0, 2.0, 3.0]));
        let m = t.mask_fill(x, &[false, true, false]).unwrap();
        let p = t.softmax_rows(m);
        assert_eq!(t.value(p).data()[1], 0.0);
        let total: f64 = t.value(p).data().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
