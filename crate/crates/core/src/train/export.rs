use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::arch::{Branch, Context, Model, SampleInputs};
use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor};

/// Which attention map to read: the global layer of `block` (1-based) in
/// `branch`, head `head`, source scale `scale`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttentionQuery {
    pub branch: Branch,
    pub block: usize,
    pub head: usize,
    pub scale: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMap {
    pub query: AttentionQuery,
    /// Layer index inside the branch.
    pub layer: usize,
    /// `T_target x T_source`, padded extents included.
    pub weights: Tensor,
    pub target_len: usize,
    pub source_len: usize,
}

/// Runs `inputs` through `model` in evaluation mode and returns one
/// attention-weight matrix.
pub fn attention_map(model: &Model, inputs: &SampleInputs, q: AttentionQuery) -> Result<AttentionMap> {
    let graph = model
        .graph()
        .ok_or_else(|| Error::Contract("unimodal models have no crossmodal attention".into()))?;
    if !model.active_branches().contains(&q.branch) {
        return Err(Error::Contract(format!("branch {} is not computed by this model", q.branch)));
    }
    let layer = graph.block_start(q.block).ok_or_else(|| {
        Error::Contract(format!(
            "block {} out of range 1..={}",
            q.block,
            graph.blocks()
        ))
    })?;
    let heads = model.config().heads;
    if q.head >= heads {
        return Err(Error::Contract(format!("head {} out of range 0..{heads}", q.head)));
    }
    let scales = graph.layers[layer].sources.len();
    if q.scale >= scales {
        return Err(Error::Contract(format!(
            "scale {} out of range 0..{scales} for block {}",
            q.scale, q.block
        )));
    }
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, inputs, &mut Context::eval_traced())?;
    let trace = out
        .trace(q.branch)
        .and_then(|t| t.get(layer))
        .ok_or_else(|| Error::Contract(format!("no trace for branch {} layer {layer}", q.branch)))?;
    Ok(AttentionMap {
        query: q,
        layer,
        weights: trace.attention[q.scale][q.head].clone(),
        target_len: inputs.get(q.branch.target).real_len(),
        source_len: inputs.get(q.branch.source).real_len(),
    })
}

/// Files written by [`export_attention`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExportedAttention {
    pub map: AttentionMap,
    pub csv: PathBuf,
    pub sidecar: PathBuf,
}

/// Writes one attention map as `attn_<T><S>_b<block>_h<head>_s<scale>.csv`
/// with a `.meta` sidecar of `key=value` lines.
pub fn export_attention(
    model: &Model,
    inputs: &SampleInputs,
    q: AttentionQuery,
    dir: impl AsRef<Path>,
) -> Result<ExportedAttention> {
    let map = attention_map(model, inputs, q)?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = format!(
        "attn_{}{}_b{}_h{}_s{}",
        q.branch.source.letter(),
        q.branch.target.letter(),
        q.block,
        q.head,
        q.scale
    );
    let csv = dir.join(format!("{stem}.csv"));
    let sidecar = dir.join(format!("{stem}.meta"));

    let w = &map.weights;
    let mut body = String::new();
    for r in 0..w.rows() {
        let row: Vec<String> = w.row(r).iter().map(|v| v.to_string()).collect();
        body.push_str(&row.join(","));
        body.push('\n');
    }
    fs::write(&csv, body).map_err(|e| Error::io(&csv, e))?;

    let mut meta = String::new();
    let _ = writeln!(meta, "branch={}", q.branch);
    let _ = writeln!(meta, "block={}", q.block);
    let _ = writeln!(meta, "layer={}", map.layer);
    let _ = writeln!(meta, "head={}", q.head);
    let _ = writeln!(meta, "scale={}", q.scale);
    let _ = writeln!(meta, "rows={}", w.rows());
    let _ = writeln!(meta, "cols={}", w.cols());
    let _ = writeln!(meta, "target_len={}", map.target_len);
    let _ = writeln!(meta, "source_len={}", map.source_len);
    fs::write(&sidecar, meta).map_err(|e| Error::io(&sidecar, e))?;

    Ok(ExportedAttention { map, csv, sidecar })
}
