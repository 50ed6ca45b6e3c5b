//! Reverse-mode automatic differentiation over [`Mat`] values.
//!
//! A [`Tape`] records one forward pass (one sample). Parameters are borrowed
//! from a [`ParamSet`] rather than copied, and [`Tape::backward`] accumulates
//! parameter gradients into a caller-owned buffer so a batch is just several
//! tapes feeding the same buffer.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::{matmul, matmul_acc, matmul_nt, matmul_nt_acc, matmul_tn_acc, Mat, Real};

const LAYER_NORM_EPS: f64 = 1e-5;

/// Named, ordered collection of trainable matrices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet<T> {
    names: Vec<String>,
    values: Vec<Mat<T>>,
}

/// Index of a parameter inside its [`ParamSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(pub usize);

impl<T: Real> ParamSet<T> {
    pub fn new() -> Self {
        Self { names: Vec::new(), values: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Mat<T>) -> ParamId {
        self.names.push(name.into());
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Mat<T> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Mat<T> {
        &mut self.values[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Mat<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Mat<T>] {
        &mut self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Mat<T>)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Mat::len).sum()
    }

    /// Zero-filled buffers shaped like every parameter.
    pub fn zeros_like(&self) -> Vec<Mat<T>> {
        self.values.iter().map(|m| Mat::zeros(m.rows(), m.cols())).collect()
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Slot<T> {
    Owned(Mat<T>),
    Param(ParamId),
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    MatMulNT(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, T),
    MaskMul(Var, Vec<T>),
    Silu(Var),
    Glu(Var),
    SoftmaxRows(Var),
    LayerNorm { x: Var, gamma: Var, beta: Var, xhat: Vec<T>, rstd: Vec<T> },
    SliceCols { x: Var, start: usize },
    ConcatCols(Vec<Var>),
    DepthwiseConv { x: Var, w: Var, stride: usize, pad: usize },
    JointDistance { pred: Var, target: Mat<T> },
}

struct Node<T> {
    slot: Slot<T>,
    op: Op<T>,
}

pub struct Tape<'p, T> {
    params: &'p ParamSet<T>,
    nodes: Vec<Node<T>>,
}

#[inline]
fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

impl<'p, T: Real> Tape<'p, T> {
    pub fn new(params: &'p ParamSet<T>) -> Self {
        Self { params, nodes: Vec::new() }
    }

    pub fn value(&self, v: Var) -> &Mat<T> {
        match &self.nodes[v.0].slot {
            Slot::Owned(m) => m,
            Slot::Param(id) => self.params.get(*id),
        }
    }

    fn push(&mut self, value: Mat<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { slot: Slot::Owned(value), op });
        Var(self.nodes.len() - 1)
    }

    /// Constant input; receives no gradient.
    pub fn constant(&mut self, value: Mat<T>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node { slot: Slot::Param(id), op: Op::Leaf });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = matmul(self.value(a), self.value(b));
        self.push(out, Op::MatMul(a, b))
    }

    /// `a · bᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let out = matmul_nt(self.value(a), self.value(b));
        self.push(out, Op::MatMulNT(a, b))
    }

    /// `x · w + b` where `b` is a `[1, out]` row.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let xw = self.matmul(x, w);
        self.add_row(xw, b)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.shape(), vb.shape(), "add shape mismatch");
        let mut out = va.clone();
        out.add_assign(vb);
        self.push(out, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.shape(), vb.shape(), "mul shape mismatch");
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| x * y).collect();
        let out = Mat::from_vec(va.rows(), va.cols(), data);
        self.push(out, Op::Mul(a, b))
    }

    /// Broadcast-add a `[1, c]` row to every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Var {
        let (vx, vr) = (self.value(x), self.value(row));
        assert_eq!(vr.shape(), (1, vx.cols()), "add_row expects a [1, cols] row");
        let mut out = vx.clone();
        let r = vr.row(0);
        for i in 0..out.rows() {
            for (o, &b) in out.row_mut(i).iter_mut().zip(r) {
                *o = *o + b;
            }
        }
        self.push(out, Op::AddRow(x, row))
    }

    pub fn scale(&mut self, x: Var, s: T) -> Var {
        let out = self.value(x).map(|v| v * s);
        self.push(out, Op::Scale(x, s))
    }

    /// Elementwise product with a constant mask (dropout).
    pub fn mask_mul(&mut self, x: Var, mask: Vec<T>) -> Var {
        let vx = self.value(x);
        assert_eq!(vx.len(), mask.len(), "mask length mismatch");
        let data = vx.data().iter().zip(&mask).map(|(&a, &m)| a * m).collect();
        let out = Mat::from_vec(vx.rows(), vx.cols(), data);
        self.push(out, Op::MaskMul(x, mask))
    }

    /// `x · sigmoid(x)`.
    pub fn silu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| v * sigmoid(v));
        self.push(out, Op::Silu(x))
    }

    /// Gated linear unit over the column halves: `a · sigmoid(b)`.
    pub fn glu(&mut self, x: Var) -> Var {
        let vx = self.value(x);
        assert!(vx.cols() % 2 == 0, "glu needs an even column count");
        let half = vx.cols() / 2;
        let out = Mat::from_fn(vx.rows(), half, |r, c| vx.get(r, c) * sigmoid(vx.get(r, c + half)));
        self.push(out, Op::Glu(x))
    }

    pub fn softmax_rows(&mut self, x: Var) -> Var {
        let mut out = self.value(x).clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let mut sum = T::zero();
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum = sum + *v;
            }
            for v in row.iter_mut() {
                *v = *v / sum;
            }
        }
        self.push(out, Op::SoftmaxRows(x))
    }

    /// Per-row normalization over columns with affine `[1, c]` gain and bias.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let vx = self.value(x);
        let (rows, cols) = vx.shape();
        let g = self.value(gamma).row(0);
        let b = self.value(beta).row(0);
        let n = T::of(cols as f64);
        let eps = T::of(LAYER_NORM_EPS);
        let mut xhat = Vec::with_capacity(rows * cols);
        let mut rstd = Vec::with_capacity(rows);
        let mut out = Mat::zeros(rows, cols);
        for r in 0..rows {
            let row = vx.row(r);
            let mean = row.iter().copied().sum::<T>() / n;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let s = T::one() / (var + eps).sqrt();
            rstd.push(s);
            let o = out.row_mut(r);
            for c in 0..cols {
                let h = (row[c] - mean) * s;
                xhat.push(h);
                o[c] = h * g[c] + b[c];
            }
        }
        self.push(out, Op::LayerNorm { x, gamma, beta, xhat, rstd })
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let vx = self.value(x);
        assert!(start + len <= vx.cols(), "column slice out of range");
        let out = Mat::from_fn(vx.rows(), len, |r, c| vx.get(r, start + c));
        self.push(out, Op::SliceCols { x, start })
    }

    pub fn concat_cols(&mut self, parts: Vec<Var>) -> Var {
        assert!(!parts.is_empty(), "concat of nothing");
        let rows = self.value(parts[0]).rows();
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut out = Mat::zeros(rows, cols);
        let mut offset = 0;
        for &p in &parts {
            let vp = self.value(p);
            assert_eq!(vp.rows(), rows, "concat row mismatch");
            for r in 0..rows {
                out.row_mut(r)[offset..offset + vp.cols()].copy_from_slice(vp.row(r));
            }
            offset += vp.cols();
        }
        self.push(out, Op::ConcatCols(parts))
    }

    /// Per-channel convolution along time (rows) with kernel `w: [k, c]`,
    /// zero padding `pad` on both ends and the given stride.
    pub fn depthwise_conv(&mut self, x: Var, w: Var, stride: usize, pad: usize) -> Var {
        let (vx, vw) = (self.value(x), self.value(w));
        assert_eq!(vx.cols(), vw.cols(), "depthwise conv channel mismatch");
        assert!(stride >= 1);
        let (t_in, ch) = vx.shape();
        let k = vw.rows();
        assert!(t_in + 2 * pad >= k, "sequence shorter than kernel");
        let t_out = (t_in + 2 * pad - k) / stride + 1;
        let mut out = Mat::zeros(t_out, ch);
        for t in 0..t_out {
            let o = out.row_mut(t);
            for j in 0..k {
                let src = (t * stride + j) as isize - pad as isize;
                if src < 0 || src as usize >= t_in {
                    continue;
                }
                let xr = vx.row(src as usize);
                let wr = vw.row(j);
                for c in 0..ch {
                    o[c] = o[c] + xr[c] * wr[c];
                }
            }
        }
        self.push(out, Op::DepthwiseConv { x, w, stride, pad })
    }

    /// Mean Euclidean distance between consecutive xyz triples of `pred` and
    /// `target`, returned as a `[1, 1]` scalar.
    pub fn joint_distance(&mut self, pred: Var, target: Mat<T>) -> Var {
        let vp = self.value(pred);
        assert_eq!(vp.shape(), target.shape(), "loss shape mismatch");
        assert!(vp.len() % 3 == 0, "loss expects xyz triples");
        let n = vp.len() / 3;
        let mut total = T::zero();
        for (p, t) in vp.data().chunks_exact(3).zip(target.data().chunks_exact(3)) {
            let d2 = (p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2) + (p[2] - t[2]).powi(2);
            total = total + d2.sqrt();
        }
        let out = Mat::from_vec(1, 1, vec![total / T::of(n as f64)]);
        self.push(out, Op::JointDistance { pred, target })
    }

    /// Backpropagates from the scalar `loss` and adds parameter gradients into
    /// `grads` (one buffer per parameter, shaped like it).
    pub fn backward(&self, loss: Var, grads: &mut [Mat<T>]) {
        assert_eq!(self.value(loss).shape(), (1, 1), "backward needs a scalar loss");
        assert_eq!(grads.len(), self.params.len());
        let mut adj: Vec<Option<Mat<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        adj[loss.0] = Some(Mat::from_vec(1, 1, vec![T::one()]));

        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    if let Slot::Param(id) = node.slot {
                        grads[id.0].add_assign(&g);
                    }
                }
                Op::MatMul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    matmul_nt_acc(&g, vb, self.adj_mut(&mut adj, *a));
                    matmul_tn_acc(va, &g, self.adj_mut(&mut adj, *b));
                }
                Op::MatMulNT(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    matmul_acc(&g, vb, self.adj_mut(&mut adj, *a));
                    matmul_tn_acc(&g, va, self.adj_mut(&mut adj, *b));
                }
                Op::Add(a, b) => {
                    self.adj_mut(&mut adj, *a).add_assign(&g);
                    self.adj_mut(&mut adj, *b).add_assign(&g);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let ga = self.adj_mut(&mut adj, *a);
                    for ((o, &d), &y) in ga.data_mut().iter_mut().zip(g.data()).zip(vb.data()) {
                        *o = *o + d * y;
                    }
                    let gb = self.adj_mut(&mut adj, *b);
                    for ((o, &d), &x) in gb.data_mut().iter_mut().zip(g.data()).zip(va.data()) {
                        *o = *o + d * x;
                    }
                }
                Op::AddRow(x, row) => {
                    self.adj_mut(&mut adj, *x).add_assign(&g);
                    let gr = self.adj_mut(&mut adj, *row);
                    let gr_row = gr.row_mut(0);
                    for r in 0..g.rows() {
                        for (o, &d) in gr_row.iter_mut().zip(g.row(r)) {
                            *o = *o + d;
                        }
                    }
                }
                Op::Scale(x, s) => {
                    let gx = self.adj_mut(&mut adj, *x);
                    for (o, &d) in gx.data_mut().iter_mut().zip(g.data()) {
                        *o = *o + d * *s;
                    }
                }
                Op::MaskMul(x, mask) => {
                    let gx = self.adj_mut(&mut adj, *x);
                    for ((o, &d), &m) in gx.data_mut().iter_mut().zip(g.data()).zip(mask) {
                        *o = *o + d * m;
                    }
                }
                Op::Silu(x) => {
                    let vx = self.value(*x);
                    let gx = self.adj_mut(&mut adj, *x);
                    for ((o, &d), &v) in gx.data_mut().iter_mut().zip(g.data()).zip(vx.data()) {
                        let s = sigmoid(v);
                        *o = *o + d * (s + v * s * (T::one() - s));
                    }
                }
                Op::Glu(x) => {
                    let vx = self.value(*x);
                    let half = vx.cols() / 2;
                    let gx = self.adj_mut(&mut adj, *x);
                    for r in 0..g.rows() {
                        for c in 0..half {
                            let a = vx.get(r, c);
                            let s = sigmoid(vx.get(r, c + half));
                            let d = g.get(r, c);
                            gx.set(r, c, gx.get(r, c) + d * s);
                            gx.set(r, c + half, gx.get(r, c + half) + d * a * s * (T::one() - s));
                        }
                    }
                }
                Op::SoftmaxRows(x) => {
                    let y = self.value(Var(i));
                    let gx = self.adj_mut(&mut adj, *x);
                    for r in 0..g.rows() {
                        let (yr, gr) = (y.row(r), g.row(r));
                        let dotp: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                        for (c, o) in gx.row_mut(r).iter_mut().enumerate() {
                            *o = *o + yr[c] * (gr[c] - dotp);
                        }
                    }
                }
                Op::LayerNorm { x, gamma, beta, xhat, rstd } => {
                    let (rows, cols) = g.shape();
                    let gam = self.value(*gamma).row(0).to_vec();
                    {
                        let gg = self.adj_mut(&mut adj, *gamma);
                        let gg = gg.row_mut(0);
                        for r in 0..rows {
                            for c in 0..cols {
                                gg[c] = gg[c] + g.get(r, c) * xhat[r * cols + c];
                            }
                        }
                    }
                    {
                        let gb = self.adj_mut(&mut adj, *beta);
                        let gb = gb.row_mut(0);
                        for r in 0..rows {
                            for (o, &d) in gb.iter_mut().zip(g.row(r)) {
                                *o = *o + d;
                            }
                        }
                    }
                    let n = T::of(cols as f64);
                    let gx = self.adj_mut(&mut adj, *x);
                    for r in 0..rows {
                        let gr = g.row(r);
                        let hr = &xhat[r * cols..(r + 1) * cols];
                        let mut mean_d = T::zero();
                        let mut mean_dh = T::zero();
                        for c in 0..cols {
                            let d = gr[c] * gam[c];
                            mean_d = mean_d + d;
                            mean_dh = mean_dh + d * hr[c];
                        }
                        mean_d = mean_d / n;
                        mean_dh = mean_dh / n;
                        let o = gx.row_mut(r);
                        for c in 0..cols {
                            let d = gr[c] * gam[c];
                            o[c] = o[c] + rstd[r] * (d - mean_d - hr[c] * mean_dh);
                        }
                    }
                }
                Op::SliceCols { x, start } => {
                    let gx = self.adj_mut(&mut adj, *x);
                    for r in 0..g.rows() {
                        for (o, &d) in gx.row_mut(r)[*start..*start + g.cols()].iter_mut().zip(g.row(r)) {
                            *o = *o + d;
                        }
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let gp = self.adj_mut(&mut adj, p);
                        let w = gp.cols();
                        for r in 0..g.rows() {
                            for (o, &d) in gp.row_mut(r).iter_mut().zip(&g.row(r)[offset..offset + w]) {
                                *o = *o + d;
                            }
                        }
                        offset += w;
                    }
                }
                Op::DepthwiseConv { x, w, stride, pad } => {
                    let (vx, vw) = (self.value(*x), self.value(*w));
                    let t_in = vx.rows();
                    let k = vw.rows();
                    let ch = vx.cols();
                    let mut gx = Mat::zeros(t_in, ch);
                    let mut gw = Mat::zeros(k, ch);
                    for t in 0..g.rows() {
                        let gr = g.row(t);
                        for j in 0..k {
                            let src = (t * stride + j) as isize - *pad as isize;
                            if src < 0 || src as usize >= t_in {
                                continue;
                            }
                            let src = src as usize;
                            for c in 0..ch {
                                gw.set(j, c, gw.get(j, c) + gr[c] * vx.get(src, c));
                                gx.set(src, c, gx.get(src, c) + gr[c] * vw.get(j, c));
                            }
                        }
                    }
                    self.adj_mut(&mut adj, *x).add_assign(&gx);
                    self.adj_mut(&mut adj, *w).add_assign(&gw);
                }
                Op::JointDistance { pred, target } => {
                    let vp = self.value(*pred);
                    let n = T::of((vp.len() / 3) as f64);
                    let scale = g.get(0, 0) / n;
                    let gp = self.adj_mut(&mut adj, *pred);
                    for ((o, p), t) in gp
                        .data_mut()
                        .chunks_exact_mut(3)
                        .zip(vp.data().chunks_exact(3))
                        .zip(target.data().chunks_exact(3))
                    {
                        let diff = [p[0] - t[0], p[1] - t[1], p[2] - t[2]];
                        let dist = (diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2]).sqrt();
                        // Subgradient 0 at coincident points.
                        if dist > T::zero() {
                            for k in 0..3 {
                                o[k] = o[k] + scale * diff[k] / dist;
                            }
                        }
                    }
                }
            }
        }
    }

    fn adj_mut<'a>(&self, adj: &'a mut [Option<Mat<T>>], v: Var) -> &'a mut Mat<T> {
        let (r, c) = self.value(v).shape();
        adj[v.0].get_or_insert_with(|| Mat::zeros(r, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central-difference check of every parameter entry for a scalar
    /// function built on the tape.
    fn check(params: &mut ParamSet<f64>, build: impl Fn(&mut Tape<'_, f64>) -> Var) {
        let mut grads = params.zeros_like();
        {
            let mut tape = Tape::new(params);
            let loss = build(&mut tape);
            tape.backward(loss, &mut grads);
        }
        let eval = |p: &ParamSet<f64>| {
            let mut tape = Tape::new(p);
            let loss = build(&mut tape);
            tape.value(loss).get(0, 0)
        };
        let h = 1e-6;
        for pi in 0..params.len() {
            for k in 0..params.values()[pi].len() {
                let orig = params.values()[pi].data()[k];
                params.values_mut()[pi].data_mut()[k] = orig + h;
                let up = eval(params);
                params.values_mut()[pi].data_mut()[k] = orig - h;
                let down = eval(params);
                params.values_mut()[pi].data_mut()[k] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads[pi].data()[k];
                let denom = numeric.abs().max(analytic.abs()).max(1e-7);
                assert!(
                    (numeric - analytic).abs() / denom < 1e-5,
                    "param {pi}[{k}]: analytic {analytic} vs numeric {numeric}"
                );
            }
        }
    }

    fn filled(rows: usize, cols: usize, seed: f64) -> Mat<f64> {
        Mat::from_fn(rows, cols, |r, c| ((r * 7 + c * 3) as f64 * 0.37 + seed).sin())
    }

    #[test]
    fn linear_softmax_and_concat_gradients() {
        let mut p = ParamSet::new();
        let a = p.add("a", filled(4, 3, 0.1));
        let w = p.add("w", filled(3, 6, 0.5));
        let b = p.add("b", filled(1, 6, 0.9));
        let target = filled(4, 3, 2.0);
        check(&mut p, |t| {
            let (a, w, b) = (t.param(a), t.param(w), t.param(b));
            let h = t.linear(a, w, b);
            let q = t.slice_cols(h, 0, 3);
            let k = t.slice_cols(h, 3, 3);
            let s = t.matmul_nt(q, k);
            let s = t.softmax_rows(s);
            let o = t.matmul(s, k);
            let o2 = t.scale(o, 0.5);
            let cat = t.concat_cols(alloc::vec![o, o2]);
            let back = t.slice_cols(cat, 1, 3);
            t.joint_distance(back, target.clone())
        });
    }

    #[test]
    fn norm_activation_and_conv_gradients() {
        let mut p = ParamSet::new();
        let x = p.add("x", filled(7, 4, 0.3));
        let g = p.add("g", filled(1, 4, 1.3));
        let bt = p.add("beta", filled(1, 4, 0.2));
        let k = p.add("k", filled(3, 4, 0.8));
        let gate = p.add("gate", filled(7, 8, 1.7));
        let target = filled(4, 3, 0.4);
        check(&mut p, |t| {
            let (x, g, bt, k, gate) = (t.param(x), t.param(g), t.param(bt), t.param(k), t.param(gate));
            let h = t.layer_norm(x, g, bt);
            let h = t.silu(h);
            let gl = t.glu(gate);
            let h = t.mul(h, gl);
            let h = t.mask_mul(h, alloc::vec![1.0; 28]);
            let h2 = t.depthwise_conv(h, k, 1, 1);
            let h = t.add(h, h2);
            let h = t.depthwise_conv(h, k, 2, 1);
            let h = t.slice_cols(h, 0, 3);
            t.joint_distance(h, target.clone())
        });
    }

    #[test]
    fn strided_conv_output_length() {
        let p = ParamSet::<f64>::new();
        let mut t = Tape::new(&p);
        let x = t.constant(Mat::zeros(50, 2));
        let w = t.constant(Mat::zeros(3, 2));
        let y = t.depthwise_conv(x, w, 2, 1);
        assert_eq!(t.value(y).shape(), (25, 2));
    }
}
