//! Define-by-run reverse-mode differentiation.
//!
//! A [`Tape`] records every operation of one forward pass as a node holding
//! its value and the inputs needed by its backward rule. Nodes are appended
//! in execution order, so the node list is already topologically sorted and
//! [`Tape::backward`] is a single reverse sweep.

use std::collections::HashMap;

use rand::Rng;

use super::dense::{gemm_nt, gemm_tn, Tensor};
use super::params::ParamId;
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Abs(Var),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Conv1d {
        x: Var,
        kernel: Var,
        bias: Var,
        width: usize,
    },
    ElementMask {
        x: Var,
        factors: Vec<f64>,
    },
    Transpose(Var),
    SliceCols {
        x: Var,
        start: usize,
    },
    ConcatCols(Vec<Var>),
    RowDot(Var, Var),
    MulCol {
        col: Var,
        x: Var,
    },
    SelectRow {
        x: Var,
        row: usize,
    },
    Sum(Var),
    CrossEntropy {
        logits: Var,
        label: usize,
        probs: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Operation recorder for one forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
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

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> [usize; 2] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records a leaf (input or constant).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Returns the leaf bound to a parameter, creating it on first use.
    pub fn param(&mut self, id: ParamId, value: &Tensor) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.leaf(value.clone());
        self.params.insert(id, v);
        v
    }

    /// Binds a parameter to an existing node, so later [`Tape::param`] calls
    /// for `id` resolve to it instead of a fresh leaf.
    pub fn bind_param(&mut self, id: ParamId, var: Var) {
        self.params.insert(id, var);
    }

    /// The node a parameter resolved to during this pass, if it was used.
    pub fn param_var(&self, id: ParamId) -> Option<Var> {
        self.params.get(&id).copied()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::dim(op, &sa, &sb));
        }
        Ok(())
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::new(ta.shape(), data).expect("zip_with preserves shape")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self.zip_with(a, b, |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = self.zip_with(a, b, |x, y| x - y);
        Ok(self.push(out, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.zip_with(a, b, |x, y| x * y);
        Ok(self.push(out, Op::Mul(a, b)))
    }

    /// `x[M x N] + row[1 x N]` broadcast over rows.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (sx, sr) = (self.shape(x), self.shape(row));
        if sr != [1, sx[1]] {
            return Err(Error::dim("add_row", &sx, &sr));
        }
        let bias = self.value(row).data().to_vec();
        let mut out = self.value(x).clone();
        for r in out.data_mut().chunks_mut(sx[1]) {
            for (o, b) in r.iter_mut().zip(&bias) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddRow(x, row)))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let out = self.value(x).map(|v| v * factor);
        self.push(out, Op::Scale(x, factor))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| v.max(0.0));
        self.push(out, Op::Relu(x))
    }

    /// Sign of every ReLU input recorded so far, in recording order. Two
    /// evaluations of the same graph with equal signatures lie on the same
    /// linear piece of every ReLU.
    pub fn relu_signature(&self) -> Vec<bool> {
        let mut sig = Vec::new();
        for node in &self.nodes {
            if let Op::Relu(x) = node.op {
                sig.extend(self.value(x).data().iter().map(|v| *v > 0.0));
            }
        }
        sig
    }

    pub fn abs(&mut self, x: Var) -> Var {
        let out = self.value(x).map(f64::abs);
        self.push(out, Op::Abs(x))
    }

    /// Row-wise softmax. Entries where `mask` is `false` get exactly zero.
    pub fn softmax_rows(&mut self, x: Var, mask: Option<&[bool]>) -> Result<Var> {
        let out = softmax_rows_value(self.value(x), mask)?;
        Ok(self.push(out, Op::Softmax(x)))
    }

    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let [m, n] = self.shape(x);
        for p in [gain, bias] {
            if self.shape(p) != [1, n] {
                return Err(Error::dim("layer_norm", &[m, n], &self.shape(p)));
            }
        }
        let xv = self.value(x).data();
        let g = self.value(gain).data();
        let b = self.value(bias).data();
        let mut out = vec![0.0; m * n];
        let mut xhat = vec![0.0; m * n];
        let mut inv_std = vec![0.0; m];
        for r in 0..m {
            let row = &xv[r * n..(r + 1) * n];
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std[r] = is;
            for c in 0..n {
                let h = (row[c] - mean) * is;
                xhat[r * n + c] = h;
                out[r * n + c] = h * g[c] + b[c];
            }
        }
        let out = Tensor::new([m, n], out)?;
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

    /// Length-preserving 1-D convolution over the time (row) axis.
    ///
    /// `kernel` is laid out as `(width * d_in) x d_out`, tap-major: row
    /// `j * d_in + i` maps input channel `i` at offset `j - (width - 1) / 2`.
    pub fn conv1d_same(&mut self, x: Var, kernel: Var, bias: Var, width: usize) -> Result<Var> {
        if width % 2 == 0 {
            return Err(Error::Config(format!(
                "convolution width must be odd, got {width}"
            )));
        }
        let [t, d_in] = self.shape(x);
        let [kr, d_out] = self.shape(kernel);
        if kr != width * d_in {
            return Err(Error::dim("conv1d_same", &[t, d_in], &[kr, d_out]));
        }
        if self.shape(bias) != [1, d_out] {
            return Err(Error::dim("conv1d_same bias", &[1, d_out], &self.shape(bias)));
        }
        let half = (width - 1) / 2;
        let xv = self.value(x).data();
        let kv = self.value(kernel).data();
        let bv = self.value(bias).data();
        let mut out = vec![0.0; t * d_out];
        for pos in 0..t {
            let orow = &mut out[pos * d_out..(pos + 1) * d_out];
            orow.copy_from_slice(bv);
            for j in 0..width {
                let src = pos as isize + j as isize - half as isize;
                if src < 0 || src >= t as isize {
                    continue;
                }
                let src = src as usize;
                let xrow = &xv[src * d_in..(src + 1) * d_in];
                for (i, &xval) in xrow.iter().enumerate() {
                    let krow = &kv[(j * d_in + i) * d_out..(j * d_in + i + 1) * d_out];
                    for (o, &k) in orow.iter_mut().zip(krow) {
                        *o += xval * k;
                    }
                }
            }
        }
        let out = Tensor::new([t, d_out], out)?;
        Ok(self.push(
            out,
            Op::Conv1d {
                x,
                kernel,
                bias,
                width,
            },
        ))
    }

    /// Inverted dropout. Identity (no node recorded) when not training or
    /// when `rate == 0`.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        x: Var,
        rate: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!(
                "dropout rate must lie in [0, 1), got {rate}"
            )));
        }
        if !training || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - rate);
        let n = self.value(x).len();
        let factors: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let out = self.value(x).clone();
        let data = out
            .data()
            .iter()
            .zip(&factors)
            .map(|(v, f)| v * f)
            .collect();
        let out = Tensor::new(out.shape(), data)?;
        Ok(self.push(out, Op::ElementMask { x, factors }))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let out = self.value(x).transpose();
        self.push(out, Op::Transpose(x))
    }

    /// Columns `start..start + width`.
    pub fn slice_cols(&mut self, x: Var, start: usize, width: usize) -> Result<Var> {
        let [m, n] = self.shape(x);
        if width == 0 || start + width > n {
            return Err(Error::Contract(format!(
                "column slice {start}..{} out of range for width {n}",
                start + width
            )));
        }
        let src = self.value(x).data();
        let mut out = Vec::with_capacity(m * width);
        for r in 0..m {
            out.extend_from_slice(&src[r * n + start..r * n + start + width]);
        }
        let out = Tensor::new([m, width], out)?;
        Ok(self.push(out, Op::SliceCols { x, start }))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::Contract("concat_cols of nothing".into()))?;
        let m = self.shape(first)[0];
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            if s[0] != m {
                return Err(Error::dim("concat_cols", &self.shape(first), &s));
            }
            total += s[1];
        }
        let mut out = Vec::with_capacity(m * total);
        for r in 0..m {
            for &p in parts {
                out.extend_from_slice(self.value(p).row(r));
            }
        }
        let out = Tensor::new([m, total], out)?;
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    /// Row-wise inner products: `[M x N], [M x N] -> [M x 1]`.
    pub fn row_dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("row_dot", a, b)?;
        let (ta, tb) = (self.value(a), self.value(b));
        let out: Vec<f64> = (0..ta.rows())
            .map(|r| ta.row(r).iter().zip(tb.row(r)).map(|(x, y)| x * y).sum())
            .collect();
        let out = Tensor::new([ta.rows(), 1], out)?;
        Ok(self.push(out, Op::RowDot(a, b)))
    }

    /// Scales each row of `x[M x N]` by the matching entry of `col[M x 1]`.
    pub fn mul_col(&mut self, col: Var, x: Var) -> Result<Var> {
        let (sc, sx) = (self.shape(col), self.shape(x));
        if sc != [sx[0], 1] {
            return Err(Error::dim("mul_col", &sc, &sx));
        }
        let c = self.value(col).data().to_vec();
        let mut out = self.value(x).clone();
        for (r, row) in out.data_mut().chunks_mut(sx[1]).enumerate() {
            for v in row {
                *v *= c[r];
            }
        }
        Ok(self.push(out, Op::MulCol { col, x }))
    }

    pub fn select_row(&mut self, x: Var, row: usize) -> Result<Var> {
        let [m, _] = self.shape(x);
        if row >= m {
            return Err(Error::Contract(format!("row {row} out of range for {m} rows")));
        }
        let out = Tensor::row_vector(self.value(x).row(row).to_vec());
        Ok(self.push(out, Op::SelectRow { x, row }))
    }

    /// Sum of all entries as a `1 x 1` node.
    pub fn sum(&mut self, x: Var) -> Var {
        let out = Tensor::scalar(self.value(x).sum());
        self.push(out, Op::Sum(x))
    }

    /// `-log softmax(logits)[label]` for a `1 x C` logit row.
    pub fn cross_entropy(&mut self, logits: Var, label: usize) -> Result<Var> {
        let [r, c] = self.shape(logits);
        if r != 1 {
            return Err(Error::dim("cross_entropy", &[1, c], &[r, c]));
        }
        if c < 2 {
            return Err(Error::Contract(format!(
                "cross entropy needs at least 2 classes, got {c}"
            )));
        }
        if label >= c {
            return Err(Error::Contract(format!(
                "label {label} out of range for {c} classes"
            )));
        }
        let z = self.value(logits).data();
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let loss = total.ln() - (z[label] - max);
        let probs = exps.iter().map(|e| e / total).collect();
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                label,
                probs,
            },
        ))
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let shape = self.shape(root);
        if shape != [1, 1] {
            return Err(Error::Contract(format!(
                "backward root must be scalar, got {}x{}",
                shape[0], shape[1]
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(vec![1.0]);

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        let grads = grads
            .into_iter()
            .zip(&self.nodes)
            .map(|(g, n)| g.map(|g| Tensor::new(n.value.shape(), g).expect("grad shape")))
            .collect();
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let shape = node.value.shape();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let [m, k] = self.shape(*a);
                let n = shape[1];
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                // dA = G * B^T, dB = A^T * G
                gemm_nt(g, bv, acc(grads, *a, m * k), m, n, k);
                gemm_tn(av, g, acc(grads, *b, k * n), k, m, n);
            }
            Op::Add(a, b) => {
                add_into(acc(grads, *a, g.len()), g);
                add_into(acc(grads, *b, g.len()), g);
            }
            Op::Sub(a, b) => {
                add_into(acc(grads, *a, g.len()), g);
                let gb = acc(grads, *b, g.len());
                for (o, v) in gb.iter_mut().zip(g) {
                    *o -= v;
                }
            }
            Op::AddRow(x, row) => {
                add_into(acc(grads, *x, g.len()), g);
                let n = shape[1];
                let gr = acc(grads, *row, n);
                for chunk in g.chunks(n) {
                    add_into(gr, chunk);
                }
            }
            Op::Mul(a, b) => {
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                let ga = acc(grads, *a, g.len());
                for i in 0..g.len() {
                    ga[i] += g[i] * bv[i];
                }
                let gb = acc(grads, *b, g.len());
                for i in 0..g.len() {
                    gb[i] += g[i] * av[i];
                }
            }
            Op::Scale(x, f) => {
                let gx = acc(grads, *x, g.len());
                for (o, v) in gx.iter_mut().zip(g) {
                    *o += v * f;
                }
            }
            Op::Relu(x) => {
                let xv = self.value(*x).data();
                let gx = acc(grads, *x, g.len());
                for i in 0..g.len() {
                    if xv[i] > 0.0 {
                        gx[i] += g[i];
                    }
                }
            }
            Op::Abs(x) => {
                let xv = self.value(*x).data();
                let gx = acc(grads, *x, g.len());
                for i in 0..g.len() {
                    gx[i] += g[i] * sign(xv[i]);
                }
            }
            Op::Softmax(x) => {
                let y = node.value.data();
                let n = shape[1];
                let gx = acc(grads, *x, g.len());
                for r in 0..shape[0] {
                    let yr = &y[r * n..(r + 1) * n];
                    let gr = &g[r * n..(r + 1) * n];
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for c in 0..n {
                        gx[r * n + c] += yr[c] * (gr[c] - dot);
                    }
                }
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            } => {
                let [m, n] = shape;
                let gv = self.value(*gain).data();
                {
                    let gg = acc(grads, *gain, n);
                    for r in 0..m {
                        for c in 0..n {
                            gg[c] += g[r * n + c] * xhat[r * n + c];
                        }
                    }
                }
                {
                    let gb = acc(grads, *bias, n);
                    for chunk in g.chunks(n) {
                        add_into(gb, chunk);
                    }
                }
                let gx = acc(grads, *x, m * n);
                let nf = n as f64;
                let mut dxhat = vec![0.0; n];
                for r in 0..m {
                    let mut s1 = 0.0;
                    let mut s2 = 0.0;
                    for c in 0..n {
                        let d = g[r * n + c] * gv[c];
                        dxhat[c] = d;
                        s1 += d;
                        s2 += d * xhat[r * n + c];
                    }
                    let k = inv_std[r] / nf;
                    for c in 0..n {
                        gx[r * n + c] += k * (nf * dxhat[c] - s1 - xhat[r * n + c] * s2);
                    }
                }
            }
            Op::Conv1d {
                x,
                kernel,
                bias,
                width,
            } => {
                let [t, d_in] = self.shape(*x);
                let d_out = shape[1];
                let half = (width - 1) / 2;
                let xv = self.value(*x).data();
                let kv = self.value(*kernel).data();
                {
                    let gb = acc(grads, *bias, d_out);
                    for chunk in g.chunks(d_out) {
                        add_into(gb, chunk);
                    }
                }
                let mut gk = vec![0.0; width * d_in * d_out];
                let mut gx = vec![0.0; t * d_in];
                for pos in 0..t {
                    let grow = &g[pos * d_out..(pos + 1) * d_out];
                    for j in 0..*width {
                        let src = pos as isize + j as isize - half as isize;
                        if src < 0 || src >= t as isize {
                            continue;
                        }
                        let src = src as usize;
                        for i in 0..d_in {
                            let kidx = (j * d_in + i) * d_out;
                            let xval = xv[src * d_in + i];
                            let mut dx = 0.0;
                            for o in 0..d_out {
                                gk[kidx + o] += xval * grow[o];
                                dx += kv[kidx + o] * grow[o];
                            }
                            gx[src * d_in + i] += dx;
                        }
                    }
                }
                add_into(acc(grads, *kernel, gk.len()), &gk);
                add_into(acc(grads, *x, gx.len()), &gx);
            }
            Op::ElementMask { x, factors } => {
                let gx = acc(grads, *x, g.len());
                for i in 0..g.len() {
                    gx[i] += g[i] * factors[i];
                }
            }
            Op::Transpose(x) => {
                let [m, n] = shape;
                let gx = acc(grads, *x, g.len());
                // node is m x n, input is n x m
                for r in 0..m {
                    for c in 0..n {
                        gx[c * m + r] += g[r * n + c];
                    }
                }
            }
            Op::SliceCols { x, start } => {
                let [m, w] = shape;
                let n = self.shape(*x)[1];
                let gx = acc(grads, *x, m * n);
                for r in 0..m {
                    add_into(
                        &mut gx[r * n + start..r * n + start + w],
                        &g[r * w..(r + 1) * w],
                    );
                }
            }
            Op::ConcatCols(parts) => {
                let [m, total] = shape;
                let mut offset = 0;
                for &p in parts {
                    let w = self.shape(p)[1];
                    let gp = acc(grads, p, m * w);
                    for r in 0..m {
                        add_into(
                            &mut gp[r * w..(r + 1) * w],
                            &g[r * total + offset..r * total + offset + w],
                        );
                    }
                    offset += w;
                }
            }
            Op::RowDot(a, b) => {
                let [m, n] = self.shape(*a);
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                {
                    let ga = acc(grads, *a, m * n);
                    for r in 0..m {
                        for c in 0..n {
                            ga[r * n + c] += g[r] * bv[r * n + c];
                        }
                    }
                }
                let gb = acc(grads, *b, m * n);
                for r in 0..m {
                    for c in 0..n {
                        gb[r * n + c] += g[r] * av[r * n + c];
                    }
                }
            }
            Op::MulCol { col, x } => {
                let [m, n] = shape;
                let cv = self.value(*col).data();
                let xv = self.value(*x).data();
                {
                    let gc = acc(grads, *col, m);
                    for r in 0..m {
                        let mut s = 0.0;
                        for c in 0..n {
                            s += g[r * n + c] * xv[r * n + c];
                        }
                        gc[r] += s;
                    }
                }
                let gx = acc(grads, *x, m * n);
                for r in 0..m {
                    for c in 0..n {
                        gx[r * n + c] += g[r * n + c] * cv[r];
                    }
                }
            }
            Op::SelectRow { x, row } => {
                let [m, n] = self.shape(*x);
                let gx = acc(grads, *x, m * n);
                add_into(&mut gx[row * n..(row + 1) * n], g);
            }
            Op::Sum(x) => {
                let n = self.value(*x).len();
                let gx = acc(grads, *x, n);
                for o in gx.iter_mut() {
                    *o += g[0];
                }
            }
            Op::CrossEntropy {
                logits,
                label,
                probs,
            } => {
                let gl = acc(grads, *logits, probs.len());
                for (c, p) in probs.iter().enumerate() {
                    let target = if c == *label { 1.0 } else { 0.0 };
                    gl[c] += g[0] * (p - target);
                }
            }
        }
    }
}

fn acc(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut [f64] {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn softmax_rows_value(x: &Tensor, mask: Option<&[bool]>) -> Result<Tensor> {
    let [m, n] = x.shape();
    if let Some(mask) = mask {
        if mask.len() != m * n {
            return Err(Error::dim("softmax mask", &[m, n], &[mask.len()]));
        }
    }
    let xv = x.data();
    let mut out = vec![0.0; m * n];
    for r in 0..m {
        let keep = |c: usize| mask.is_none_or(|mk| mk[r * n + c]);
        let mut max = f64::NEG_INFINITY;
        for c in 0..n {
            if keep(c) {
                max = max.max(xv[r * n + c]);
            }
        }
        if max == f64::NEG_INFINITY {
            return Err(Error::DegenerateMask { row: r });
        }
        let mut total = 0.0;
        for c in 0..n {
            if keep(c) {
                let e = (xv[r * n + c] - max).exp();
                out[r * n + c] = e;
                total += e;
            }
        }
        for v in &mut out[r * n..(r + 1) * n] {
            *v /= total;
        }
    }
    Tensor::new([m, n], out)
}

/// Gradients produced by [`Tape::backward`], indexed by node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of a node, `None` when the node does not reach the root.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of a node, zero-filled when it does not reach the root.
    pub fn wrt(&self, tape: &Tape, v: Var) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| {
            let [r, c] = tape.shape(v);
            Tensor::zeros(r, c)
        })
    }
}
