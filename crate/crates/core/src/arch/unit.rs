//! The two transformer units of a branch.
//!
//! A MACT layer attends the target stream to several source scales, mixes
//! the resulting candidates with attention over the scale axis, then applies
//! the residual feed-forward step. A CT layer is the same unit with a single
//! source scale and no mixing.

use super::attention::{attend, project_queries, AttentionParams, Context};
use crate::error::{Error, Result};
use crate::tensor::{Init, ParamId, ParameterStore, Tape, Tensor, Var};

const LN_EPS: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct LayerNormParams {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl LayerNormParams {
    fn register(store: &mut ParameterStore, prefix: &str, width: usize) -> Self {
        LayerNormParams {
            gain: store.register(format!("{prefix}/gain"), 1, width, Init::Ones),
            bias: store.register(format!("{prefix}/bias"), 1, width, Init::Zeros),
        }
    }

    fn apply(&self, tape: &mut Tape, store: &ParameterStore, x: Var) -> Result<Var> {
        let g = tape.param(self.gain, store.get(self.gain));
        let b = tape.param(self.bias, store.get(self.bias));
        tape.layer_norm(x, g, b, LN_EPS)
    }
}

/// Two-layer position-wise map `d -> 4d -> d` with ReLU.
#[derive(Clone, Debug)]
pub struct FeedForwardParams {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

impl FeedForwardParams {
    fn register(store: &mut ParameterStore, prefix: &str, width: usize) -> Self {
        let inner = 4 * width;
        FeedForwardParams {
            w1: store.register(
                format!("{prefix}/w1"),
                width,
                inner,
                Init::Glorot {
                    fan_in: width,
                    fan_out: inner,
                },
            ),
            b1: store.register(format!("{prefix}/b1"), 1, inner, Init::Zeros),
            w2: store.register(
                format!("{prefix}/w2"),
                inner,
                width,
                Init::Glorot {
                    fan_in: inner,
                    fan_out: width,
                },
            ),
            b2: store.register(format!("{prefix}/b2"), 1, width, Init::Zeros),
        }
    }
}

/// Query/key projections of the attention over scales.
#[derive(Clone, Debug)]
pub struct AggregateParams {
    pub w_query: ParamId,
    pub w_key: ParamId,
}

/// Weights of one MACT or CT layer.
#[derive(Clone, Debug)]
pub struct UnitParams {
    pub attention: AttentionParams,
    /// Present on MACT layers only.
    pub aggregate: Option<AggregateParams>,
    pub ln_prev: LayerNormParams,
    pub ln_ff: LayerNormParams,
    pub ff: FeedForwardParams,
}

impl UnitParams {
    /// Registers a MACT layer over `sources` scales.
    pub fn register_mact(
        store: &mut ParameterStore,
        prefix: &str,
        width: usize,
        heads: usize,
        sources: usize,
    ) -> Self {
        let mut p = Self::register_common(store, prefix, width, heads, sources);
        let square = Init::Glorot {
            fan_in: width,
            fan_out: width,
        };
        p.aggregate = Some(AggregateParams {
            w_query: store.register(format!("{prefix}/agg/w_query"), width, width, square),
            w_key: store.register(format!("{prefix}/agg/w_key"), width, width, square),
        });
        p
    }

    /// Registers a CT layer (one source, no mixing).
    pub fn register_ct(store: &mut ParameterStore, prefix: &str, width: usize, heads: usize) -> Self {
        Self::register_common(store, prefix, width, heads, 1)
    }

    fn register_common(
        store: &mut ParameterStore,
        prefix: &str,
        width: usize,
        heads: usize,
        sources: usize,
    ) -> Self {
        UnitParams {
            attention: AttentionParams::register(store, &format!("{prefix}/attn"), width, heads, sources),
            aggregate: None,
            ln_prev: LayerNormParams::register(store, &format!("{prefix}/ln_prev"), width),
            ln_ff: LayerNormParams::register(store, &format!("{prefix}/ln_ff"), width),
            ff: FeedForwardParams::register(store, &format!("{prefix}/ff"), width),
        }
    }

    pub fn is_multiscale(&self) -> bool {
        self.aggregate.is_some()
    }

    pub fn source_count(&self) -> usize {
        self.attention.kv.len()
    }
}

/// Values kept from one unit for inspection and export.
#[derive(Clone, Debug)]
pub struct MactTrace {
    /// One crossmodal candidate per source scale.
    pub interactions: Vec<Tensor>,
    /// Scale-mixed candidate fed to the feed-forward step.
    pub aggregated: Tensor,
    /// Feed-forward output.
    pub feed_forward: Tensor,
    /// `attention[scale][head]`, each `T_target x T_source`.
    pub attention: Vec<Vec<Tensor>>,
}

/// Rates used inside units.
#[derive(Clone, Copy, Debug)]
pub struct Dropout {
    pub attn: f64,
    pub fc: f64,
}

/// One crossmodal candidate per source scale, sharing the query projection.
#[allow(clippy::too_many_arguments)]
pub fn multiscale_interaction_set(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &UnitParams,
    target_prev: Var,
    sources: &[Var],
    source_mask: Option<&[bool]>,
    dropout: Dropout,
    ctx: &mut Context,
) -> Result<(Vec<Var>, Vec<Vec<Tensor>>)> {
    if sources.is_empty() {
        return Err(Error::Contract("multi-scale interaction set needs at least one scale".into()));
    }
    if sources.len() != params.attention.kv.len() {
        return Err(Error::Contract(format!(
            "layer has {} key/value projections but received {} scales",
            params.attention.kv.len(),
            sources.len()
        )));
    }
    let queries = project_queries(tape, store, &params.attention, target_prev)?;
    let mut outs = Vec::with_capacity(sources.len());
    let mut weights = Vec::with_capacity(sources.len());
    for (kv, &src) in params.attention.kv.iter().zip(sources) {
        let (o, w) = attend(
            tape,
            store,
            &params.attention,
            kv,
            queries,
            src,
            source_mask,
            dropout.attn,
            ctx,
        )?;
        outs.push(o);
        weights.push(w);
    }
    Ok((outs, weights))
}

/// Mixes candidates per time step with scaled dot-product attention over
/// the scale axis. The query comes from the target stream, keys from each
/// candidate; the output is a convex combination of the candidates.
pub fn multiscale_aggregate(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &AggregateParams,
    target_prev: Var,
    candidates: &[Var],
) -> Result<Var> {
    let first = *candidates
        .first()
        .ok_or_else(|| Error::Contract("cannot aggregate an empty candidate set".into()))?;
    let shape = tape.shape(first);
    for &c in candidates {
        if tape.shape(c) != shape {
            return Err(Error::dim("multiscale_aggregate", &shape, &tape.shape(c)));
        }
    }
    let w_query = tape.param(params.w_query, store.get(params.w_query));
    let w_key = tape.param(params.w_key, store.get(params.w_key));
    let query = tape.matmul(target_prev, w_query)?;
    let mut scores = Vec::with_capacity(candidates.len());
    for &c in candidates {
        let key = tape.matmul(c, w_key)?;
        scores.push(tape.row_dot(query, key)?);
    }
    let scores = if scores.len() == 1 {
        scores[0]
    } else {
        tape.concat_cols(&scores)?
    };
    let scores = tape.scale(scores, 1.0 / (shape[1] as f64).sqrt());
    let weights = tape.softmax_rows(scores, None)?;

    let mut out: Option<Var> = None;
    for (j, &c) in candidates.iter().enumerate() {
        let w = if candidates.len() == 1 {
            weights
        } else {
            tape.slice_cols(weights, j, 1)?
        };
        let term = tape.mul_col(w, c)?;
        out = Some(match out {
            None => term,
            Some(acc) => tape.add(acc, term)?,
        });
    }
    Ok(out.expect("non-empty candidates"))
}

/// Residual feed-forward step:
/// `R = A + LN(Z_prev)`, `P = f(LN(R))`, `Z_next = R + P`.
/// Returns `(Z_next, P)`.
pub fn positionwise_ff(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &UnitParams,
    attended: Var,
    target_prev: Var,
    fc_dropout: f64,
    ctx: &mut Context,
) -> Result<(Var, Var)> {
    let normed_prev = params.ln_prev.apply(tape, store, target_prev)?;
    let residual = tape.add(attended, normed_prev)?;
    let normed = params.ln_ff.apply(tape, store, residual)?;

    let ff = &params.ff;
    let w1 = tape.param(ff.w1, store.get(ff.w1));
    let b1 = tape.param(ff.b1, store.get(ff.b1));
    let w2 = tape.param(ff.w2, store.get(ff.w2));
    let b2 = tape.param(ff.b2, store.get(ff.b2));
    let hidden = tape.matmul(normed, w1)?;
    let hidden = tape.add_row(hidden, b1)?;
    let hidden = tape.relu(hidden);
    let hidden = tape.dropout(hidden, fc_dropout, ctx.training, &mut ctx.rng)?;
    let p = tape.matmul(hidden, w2)?;
    let p = tape.add_row(p, b2)?;
    let next = tape.add(residual, p)?;
    Ok((next, p))
}

/// MACT layer: multi-scale interaction set, scale attention, feed-forward.
#[allow(clippy::too_many_arguments)]
pub fn mact_forward(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &UnitParams,
    target_prev: Var,
    sources: &[Var],
    source_mask: Option<&[bool]>,
    dropout: Dropout,
    ctx: &mut Context,
) -> Result<(Var, Option<MactTrace>)> {
    let agg = params
        .aggregate
        .as_ref()
        .ok_or_else(|| Error::Contract("MACT forward on a layer without scale attention".into()))?;
    let (candidates, attention) = multiscale_interaction_set(
        tape,
        store,
        params,
        target_prev,
        sources,
        source_mask,
        dropout,
        ctx,
    )?;
    let aggregated = multiscale_aggregate(tape, store, agg, target_prev, &candidates)?;
    let (next, p) = positionwise_ff(tape, store, params, aggregated, target_prev, dropout.fc, ctx)?;
    let trace = ctx.trace.then(|| MactTrace {
        interactions: candidates.iter().map(|&c| tape.value(c).clone()).collect(),
        aggregated: tape.value(aggregated).clone(),
        feed_forward: tape.value(p).clone(),
        attention,
    });
    Ok((next, trace))
}

/// CT layer: single-source crossmodal attention then feed-forward.
#[allow(clippy::too_many_arguments)]
pub fn ct_forward(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &UnitParams,
    target_prev: Var,
    source: Var,
    source_mask: Option<&[bool]>,
    dropout: Dropout,
    ctx: &mut Context,
) -> Result<(Var, Option<MactTrace>)> {
    let (candidates, attention) = multiscale_interaction_set(
        tape,
        store,
        params,
        target_prev,
        &[source],
        source_mask,
        dropout,
        ctx,
    )?;
    let attended = candidates[0];
    let (next, p) = positionwise_ff(tape, store, params, attended, target_prev, dropout.fc, ctx)?;
    let trace = ctx.trace.then(|| MactTrace {
        interactions: vec![tape.value(attended).clone()],
        aggregated: tape.value(attended).clone(),
        feed_forward: tape.value(p).clone(),
        attention,
    });
    Ok((next, trace))
}

/// Dispatches on the unit kind.
#[allow(clippy::too_many_arguments)]
pub fn unit_forward(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &UnitParams,
    target_prev: Var,
    sources: &[Var],
    source_mask: Option<&[bool]>,
    dropout: Dropout,
    ctx: &mut Context,
) -> Result<(Var, Option<MactTrace>)> {
    if params.is_multiscale() {
        mact_forward(tape, store, params, target_prev, sources, source_mask, dropout, ctx)
    } else {
        let [source] = sources else {
            return Err(Error::Contract(format!(
                "CT layer takes exactly one source, got {}",
                sources.len()
            )));
        };
        ct_forward(tape, store, params, target_prev, *source, source_mask, dropout, ctx)
    }
}
