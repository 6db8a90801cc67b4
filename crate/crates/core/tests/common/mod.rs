//! Plain-loop reference implementations used as test oracles. They share no
//! code with the library beyond the `Tensor` container and parameter names.
#![allow(dead_code)]

use mcmult::arch::{Branch, BranchSet, ModalityKind, ModelConfig, SampleInputs, Task, Variant};
use mcmult::tensor::{ParameterStore, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LN_EPS: f64 = 1e-5;

pub fn random_tensor(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Tensor {
    Tensor::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mm(a: &Tensor, b: &Tensor) -> Tensor {
    assert_eq!(a.cols(), b.rows());
    Tensor::from_fn(a.rows(), b.cols(), |i, j| {
        let mut s = 0.0;
        for k in 0..a.cols() {
            s += a.get(i, k) * b.get(k, j);
        }
        s
    })
}

pub fn add(a: &Tensor, b: &Tensor) -> Tensor {
    Tensor::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) + b.get(i, j))
}

pub fn add_row(a: &Tensor, row: &Tensor) -> Tensor {
    Tensor::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) + row.get(0, j))
}

pub fn cols(a: &Tensor, start: usize, width: usize) -> Tensor {
    Tensor::from_fn(a.rows(), width, |i, j| a.get(i, start + j))
}

pub fn hcat(parts: &[Tensor]) -> Tensor {
    let rows = parts[0].rows();
    let total: usize = parts.iter().map(|p| p.cols()).sum();
    Tensor::from_fn(rows, total, |i, mut j| {
        for p in parts {
            if j < p.cols() {
                return p.get(i, j);
            }
            j -= p.cols();
        }
        unreachable!()
    })
}

pub fn transpose(a: &Tensor) -> Tensor {
    Tensor::from_fn(a.cols(), a.rows(), |i, j| a.get(j, i))
}

/// Row softmax; masked entries get weight 0.
pub fn softmax(a: &Tensor, keep: Option<&[bool]>) -> Tensor {
    let mut out = Tensor::zeros(a.rows(), a.cols());
    for i in 0..a.rows() {
        let ok = |j: usize| keep.is_none_or(|k| k[j]);
        let max = (0..a.cols()).filter(|&j| ok(j)).map(|j| a.get(i, j)).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = (0..a.cols()).filter(|&j| ok(j)).map(|j| (a.get(i, j) - max).exp()).sum();
        for j in (0..a.cols()).filter(|&j| ok(j)) {
            out.set(i, j, (a.get(i, j) - max).exp() / z);
        }
    }
    out
}

pub fn layer_norm(x: &Tensor, gain: &Tensor, bias: &Tensor) -> Tensor {
    let n = x.cols() as f64;
    Tensor::from_fn(x.rows(), x.cols(), |i, j| {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (x.get(i, j) - mean) / (var + LN_EPS).sqrt() * gain.get(0, j) + bias.get(0, j)
    })
}

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

/// Multi-head scaled dot-product attention written out step by step.
#[allow(clippy::too_many_arguments)]
pub fn attention(
    target: &Tensor,
    source: &Tensor,
    w_q: &Tensor,
    w_k: &Tensor,
    w_v: &Tensor,
    w_o: &Tensor,
    b_o: &Tensor,
    heads: usize,
    keep: Option<&[bool]>,
) -> (Tensor, Vec<Tensor>) {
    let q = mm(target, w_q);
    let k = mm(source, w_k);
    let v = mm(source, w_v);
    let dk = w_q.cols() / heads;
    let mut outs = Vec::new();
    let mut weights = Vec::new();
    for h in 0..heads {
        let qh = cols(&q, h * dk, dk);
        let kh = cols(&k, h * dk, dk);
        let vh = cols(&v, h * dk, dk);
        let logits = mm(&qh, &transpose(&kh)).map(|x| x / (dk as f64).sqrt());
        let w = softmax(&logits, keep);
        outs.push(mm(&w, &vh));
        weights.push(w);
    }
    (add_row(&mm(&hcat(&outs), w_o), b_o), weights)
}

/// Weights of one single-source unit, read by name.
pub struct RefUnit {
    pub w_q: Tensor,
    pub w_k: Tensor,
    pub w_v: Tensor,
    pub w_o: Tensor,
    pub b_o: Tensor,
    pub ln_prev: (Tensor, Tensor),
    pub ln_ff: (Tensor, Tensor),
    pub ff: [Tensor; 4],
}

pub fn param(store: &ParameterStore, name: &str) -> Tensor {
    let id = store.lookup(name).unwrap_or_else(|| panic!("missing parameter {name}"));
    store.get(id).clone()
}

impl RefUnit {
    pub fn load(store: &ParameterStore, prefix: &str) -> Self {
        let p = |s: &str| param(store, &format!("{prefix}/{s}"));
        RefUnit {
            w_q: p("attn/w_q"),
            w_k: p("attn/w_k0"),
            w_v: p("attn/w_v0"),
            w_o: p("attn/w_o"),
            b_o: p("attn/b_o"),
            ln_prev: (p("ln_prev/gain"), p("ln_prev/bias")),
            ln_ff: (p("ln_ff/gain"), p("ln_ff/bias")),
            ff: [p("ff/w1"), p("ff/b1"), p("ff/w2"), p("ff/b2")],
        }
    }
}

/// `R = A + LN(Z_prev)`, `P = f(LN(R))`, `Z = R + P`; returns `(Z, P)`.
pub fn feed_forward(u: &RefUnit, attended: &Tensor, prev: &Tensor) -> (Tensor, Tensor) {
    let r = add(attended, &layer_norm(prev, &u.ln_prev.0, &u.ln_prev.1));
    let hidden = relu(&add_row(&mm(&layer_norm(&r, &u.ln_ff.0, &u.ln_ff.1), &u.ff[0]), &u.ff[1]));
    let p = add_row(&mm(&hidden, &u.ff[2]), &u.ff[3]);
    (add(&r, &p), p)
}

pub fn ct(u: &RefUnit, prev: &Tensor, source: &Tensor, heads: usize, keep: Option<&[bool]>) -> Tensor {
    let (a, _) = attention(prev, source, &u.w_q, &u.w_k, &u.w_v, &u.w_o, &u.b_o, heads, keep);
    feed_forward(u, &a, prev).0
}

pub fn positional(len: usize, dim: usize) -> Tensor {
    Tensor::from_fn(len, dim, |pos, c| {
        let freq = 1.0 / 10000f64.powf((c - c % 2) as f64 / dim as f64);
        if c % 2 == 0 {
            (pos as f64 * freq).sin()
        } else {
            (pos as f64 * freq).cos()
        }
    })
}

/// Same-padded temporal convolution plus optional sinusoidal positions.
pub fn embed(x: &Tensor, kernel: &Tensor, bias: &Tensor, width: usize, pe: bool) -> Tensor {
    let d_in = x.cols();
    let d = kernel.cols();
    let half = (width / 2) as isize;
    let mut out = Tensor::from_fn(x.rows(), d, |t, o| {
        let mut s = bias.get(0, o);
        for tap in 0..width {
            let src = t as isize + tap as isize - half;
            if src < 0 || src >= x.rows() as isize {
                continue;
            }
            for i in 0..d_in {
                s += x.get(src as usize, i) * kernel.get(tap * d_in + i, o);
            }
        }
        s
    });
    if pe {
        out = add(&out, &positional(x.rows(), d));
    }
    out
}

/// A flat single-scale model written from scratch: each enabled branch is
/// a stack of single-source units over the source's low-level features,
/// followed by the same prediction module.
pub fn flat_stack_forward(cfg: &ModelConfig, store: &ParameterStore, inputs: &SampleInputs) -> Tensor {
    assert_eq!(cfg.variant, Variant::MulT);
    let depth = cfg.flat_depth.unwrap_or(cfg.blocks * (1 + cfg.layers_per_block));
    let keep = |m: ModalityKind| inputs.get(m).mask.as_deref();
    let z0: Vec<Option<Tensor>> = ModalityKind::ALL
        .iter()
        .map(|&m| {
            let used = cfg.branches.iter().any(|b| b.source == m || b.target == m);
            used.then(|| {
                embed(
                    &inputs.get(m).data,
                    &param(store, &format!("embed/{m}/kernel")),
                    &param(store, &format!("embed/{m}/bias")),
                    cfg.kernels[m.index()],
                    cfg.positional_encoding,
                )
            })
        })
        .collect();

    let mut pooled = Vec::new();
    for target in ModalityKind::ALL {
        let branches: Vec<Branch> = Branch::ALL
            .into_iter()
            .filter(|b| b.target == target && cfg.branches.contains(*b))
            .collect();
        if branches.is_empty() {
            continue;
        }
        let finals: Vec<Tensor> = branches
            .iter()
            .map(|b| {
                let source = z0[b.source.index()].as_ref().unwrap();
                let mut z = z0[target.index()].clone().unwrap();
                for i in 0..depth {
                    let u = RefUnit::load(store, &format!("{b}/layer{i}"));
                    z = ct(&u, &z, source, cfg.heads, keep(b.source));
                }
                z
            })
            .collect();
        let mut z = hcat(&finals);
        for p in 0..cfg.prediction_layers {
            let u = RefUnit::load(store, &format!("predict/{target}/layer{p}"));
            z = ct(&u, &z, &z.clone(), cfg.heads, keep(target));
        }
        let last = inputs.get(target).real_len() - 1;
        pooled.push(Tensor::from_fn(1, z.cols(), |_, j| z.get(last, j)));
    }
    let features = hcat(&pooled);
    let hidden = relu(&add_row(
        &mm(&features, &param(store, "head/fc1/w")),
        &param(store, "head/fc1/b"),
    ));
    add_row(&mm(&hidden, &param(store, "head/fc2/w")), &param(store, "head/fc2/b"))
}

/// Closed-form trainable-scalar count, derived from the layer definitions.
pub fn closed_form_count(cfg: &ModelConfig) -> usize {
    let d = cfg.dim;
    let ct = |w: usize| 12 * w * w + 10 * w;
    let mact = |w: usize, n: usize| (12 + 2 * n) * w * w + 10 * w;
    let (b, l) = (cfg.blocks, cfg.layers_per_block);

    let per_branch: usize = match cfg.variant {
        Variant::MCMulT => (1..=b).map(|i| mact(d, i) + l * ct(d)).sum(),
        Variant::Global => (1..=b).map(|i| mact(d, i)).sum(),
        Variant::LocalDense => (1..=b)
            .map(|i| mact(d, i) + (1..=l).map(|k| mact(d, k)).sum::<usize>())
            .sum(),
        Variant::Dense => (0..b * (1 + l)).map(|i| mact(d, i + 1)).sum(),
        Variant::MulT => cfg.flat_depth.unwrap_or(b * (1 + l)) * ct(d),
    };
    // Siblings are computed only when some layer reads a sibling layer.
    let reads_sibling = match cfg.variant {
        Variant::MulT => false,
        Variant::Global => b >= 2,
        Variant::MCMulT | Variant::LocalDense => b >= 2 || l >= 1,
        Variant::Dense => b * (1 + l) >= 2,
    };
    let active = if reads_sibling {
        cfg.branches.with_siblings()
    } else {
        cfg.branches
    };
    let embeds: usize = active
        .modalities()
        .iter()
        .map(|m| cfg.kernels[m.index()] * cfg.input_dims[m.index()] * d + d)
        .sum();
    let mut head_in = 0;
    let mut predict = 0;
    for m in ModalityKind::ALL {
        let k = BranchSet::targeting(m).iter().filter(|b| cfg.branches.contains(*b)).count();
        if k > 0 {
            head_in += k * d;
            predict += cfg.prediction_layers * ct(k * d);
        }
    }
    let c = match cfg.task {
        Task::Classification { classes } => classes,
        Task::Regression => 1,
    };
    let head = head_in * head_in + head_in + head_in * c + c;
    active.len() * per_branch + embeds + predict + head
}
