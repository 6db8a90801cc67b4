//! Multi-head crossmodal attention.
//!
//! Per head `h`: `softmax(Q_h K_h^T / sqrt(d_k)) V_h`, with `Q` projected from
//! the target stream and `K`, `V` from the source stream. Heads are
//! concatenated and mapped through an output projection.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Init, ParamId, ParameterStore, Tape, Tensor, Var};

/// Forward-pass switches shared by every layer.
#[derive(Debug)]
pub struct Context {
    pub training: bool,
    /// Keep attention weights and intermediate values for export.
    pub trace: bool,
    pub rng: ChaCha8Rng,
}

impl Context {
    pub fn eval() -> Self {
        use rand::SeedableRng;
        Context {
            training: false,
            trace: false,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn eval_traced() -> Self {
        Context {
            trace: true,
            ..Self::eval()
        }
    }

    pub fn train(rng: ChaCha8Rng) -> Self {
        Context {
            training: true,
            trace: false,
            rng,
        }
    }
}

/// Key and value projections for one source stream.
#[derive(Clone, Debug)]
pub struct KeyValue {
    pub w_k: ParamId,
    pub w_v: ParamId,
}

/// Projections of one attention layer: a shared query projection, one
/// key/value pair per attended source scale, and a shared output projection.
#[derive(Clone, Debug)]
pub struct AttentionParams {
    pub width: usize,
    pub heads: usize,
    pub w_q: ParamId,
    pub kv: Vec<KeyValue>,
    pub w_o: ParamId,
    pub b_o: ParamId,
}

impl AttentionParams {
    pub fn register(
        store: &mut ParameterStore,
        prefix: &str,
        width: usize,
        heads: usize,
        sources: usize,
    ) -> Self {
        let square = Init::Glorot {
            fan_in: width,
            fan_out: width,
        };
        let w_q = store.register(format!("{prefix}/w_q"), width, width, square);
        let kv = (0..sources)
            .map(|j| KeyValue {
                w_k: store.register(format!("{prefix}/w_k{j}"), width, width, square),
                w_v: store.register(format!("{prefix}/w_v{j}"), width, width, square),
            })
            .collect();
        let w_o = store.register(format!("{prefix}/w_o"), width, width, square);
        let b_o = store.register(format!("{prefix}/b_o"), 1, width, Init::Zeros);
        AttentionParams {
            width,
            heads,
            w_q,
            kv,
            w_o,
            b_o,
        }
    }
}

/// Projects the target stream to queries.
pub fn project_queries(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &AttentionParams,
    target: Var,
) -> Result<Var> {
    let w_q = tape.param(params.w_q, store.get(params.w_q));
    tape.matmul(target, w_q)
}

/// Attends already-projected queries to one source stream using the key and
/// value projections `kv`. Returns the `T_target x d` output and, when
/// tracing, the pre-dropout attention weights of every head.
#[allow(clippy::too_many_arguments)]
pub fn attend(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &AttentionParams,
    kv: &KeyValue,
    queries: Var,
    source: Var,
    source_mask: Option<&[bool]>,
    attn_dropout: f64,
    ctx: &mut Context,
) -> Result<(Var, Vec<Tensor>)> {
    let [t_a, width] = tape.shape(queries);
    let [t_b, src_width] = tape.shape(source);
    if width != params.width || src_width != params.width {
        return Err(Error::dim("crossmodal attention", &[t_a, width], &[t_b, src_width]));
    }
    let mask = match source_mask {
        Some(m) => {
            if m.len() != t_b {
                return Err(Error::dim("source mask", &[t_b], &[m.len()]));
            }
            if !m.iter().any(|&v| v) {
                return Err(Error::DegenerateMask { row: 0 });
            }
            Some(m.repeat(t_a))
        }
        None => None,
    };

    let w_k = tape.param(kv.w_k, store.get(kv.w_k));
    let w_v = tape.param(kv.w_v, store.get(kv.w_v));
    let keys = tape.matmul(source, w_k)?;
    let values = tape.matmul(source, w_v)?;

    let d_k = width / params.heads;
    let scale = 1.0 / (d_k as f64).sqrt();
    let mut head_outputs = Vec::with_capacity(params.heads);
    let mut weights = Vec::new();
    for h in 0..params.heads {
        let q = tape.slice_cols(queries, h * d_k, d_k)?;
        let k = tape.slice_cols(keys, h * d_k, d_k)?;
        let v = tape.slice_cols(values, h * d_k, d_k)?;
        let kt = tape.transpose(k);
        let logits = tape.matmul(q, kt)?;
        let logits = tape.scale(logits, scale);
        let probs = tape.softmax_rows(logits, mask.as_deref())?;
        if ctx.trace {
            weights.push(tape.value(probs).clone());
        }
        let probs = tape.dropout(probs, attn_dropout, ctx.training, &mut ctx.rng)?;
        head_outputs.push(tape.matmul(probs, v)?);
    }
    let concat = if head_outputs.len() == 1 {
        head_outputs[0]
    } else {
        tape.concat_cols(&head_outputs)?
    };
    let w_o = tape.param(params.w_o, store.get(params.w_o));
    let b_o = tape.param(params.b_o, store.get(params.b_o));
    let projected = tape.matmul(concat, w_o)?;
    let out = tape.add_row(projected, b_o)?;
    Ok((out, weights))
}

/// Single-source crossmodal attention from `target` (queries) to `source`
/// (keys and values), using the first key/value pair of `params`.
#[allow(clippy::too_many_arguments)]
pub fn crossmodal_attention(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &AttentionParams,
    target: Var,
    source: Var,
    source_mask: Option<&[bool]>,
    attn_dropout: f64,
    ctx: &mut Context,
) -> Result<(Var, Vec<Tensor>)> {
    let kv = params
        .kv
        .first()
        .ok_or_else(|| Error::Contract("attention layer has no key/value projection".into()))?;
    let queries = project_queries(tape, store, params, target)?;
    attend(
        tape,
        store,
        params,
        kv,
        queries,
        source,
        source_mask,
        attn_dropout,
        ctx,
    )
}
