//! Which sibling representations feed each layer of a branch.
//!
//! Every enabled branch runs the same plan. Layers are computed in lockstep
//! across branches (layer 0 of every branch, then layer 1, ...), so a layer
//! may read any sibling layer with a strictly smaller index.

use super::config::{ModelConfig, Variant};
use crate::error::{Error, Result};

/// A representation of the sibling branch (the source modality's stream).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScaleRef {
    /// The source modality's low-level embedding (scale 0).
    LowLevel,
    /// Output of the sibling branch's layer with this index.
    Layer(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerRole {
    /// First layer of a block, reading block-level scales.
    Global,
    /// Later layer inside a block, reading representations of the same level.
    Local,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerPlan {
    /// 1-based block index.
    pub block: usize,
    pub role: LayerRole,
    /// MACT layer (multi-scale with scale attention) rather than CT.
    pub multiscale: bool,
    pub sources: Vec<ScaleRef>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectivityGraph {
    pub variant: Variant,
    pub layers: Vec<LayerPlan>,
    /// `block_outputs[i]` is the layer whose output is scale `i + 1`.
    pub block_outputs: Vec<usize>,
}

impl ConnectivityGraph {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn blocks(&self) -> usize {
        self.block_outputs.len()
    }

    /// Scale index (0 = low level) read by a reference, if it is a block
    /// output.
    pub fn scale_of(&self, r: ScaleRef) -> Option<usize> {
        match r {
            ScaleRef::LowLevel => Some(0),
            ScaleRef::Layer(j) => self.block_outputs.iter().position(|&o| o == j).map(|i| i + 1),
        }
    }

    /// Scale indices feeding the global layer of `block` (1-based).
    pub fn global_sources(&self, block: usize) -> Vec<usize> {
        self.layers
            .iter()
            .find(|l| l.block == block && l.role == LayerRole::Global)
            .map(|l| l.sources.iter().filter_map(|&r| self.scale_of(r)).collect())
            .unwrap_or_default()
    }

    /// Number of (layer, sibling-layer) edges into local layers.
    pub fn local_edge_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.role == LayerRole::Local)
            .map(|l| l.sources.len())
            .sum()
    }

    /// Whether any layer reads a sibling layer, i.e. branches cannot run
    /// without their sibling.
    pub fn needs_sibling(&self) -> bool {
        self.layers
            .iter()
            .any(|l| l.sources.iter().any(|r| matches!(r, ScaleRef::Layer(_))))
    }

    /// Index of the first layer of `block` (1-based).
    pub fn block_start(&self, block: usize) -> Option<usize> {
        self.layers.iter().position(|l| l.block == block)
    }

    /// Every reference must point strictly backwards in the lockstep order.
    pub fn validate(&self) -> Result<()> {
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.sources.is_empty() {
                return Err(Error::Scheduling(format!("layer {i} has no sources")));
            }
            if !layer.multiscale && layer.sources.len() != 1 {
                return Err(Error::Scheduling(format!(
                    "single-scale layer {i} has {} sources",
                    layer.sources.len()
                )));
            }
            for r in &layer.sources {
                if let ScaleRef::Layer(j) = *r {
                    if j >= i {
                        return Err(Error::Scheduling(format!(
                            "layer {i} reads sibling layer {j}, which is not computed yet"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the layer plan of a variant.
pub fn build_connectivity(cfg: &ModelConfig) -> Result<ConnectivityGraph> {
    cfg.validate()?;
    let b_count = cfg.blocks;
    let l_count = cfg.layers_per_block;
    let mut layers = Vec::new();
    let mut block_outputs = Vec::new();

    match cfg.variant {
        Variant::MCMulT | Variant::LocalDense | Variant::Global => {
            let with_locals = cfg.variant != Variant::Global;
            for block in 1..=b_count {
                let mut sources = vec![ScaleRef::LowLevel];
                sources.extend(block_outputs.iter().map(|&o| ScaleRef::Layer(o)));
                let global = layers.len();
                layers.push(LayerPlan {
                    block,
                    role: LayerRole::Global,
                    multiscale: true,
                    sources,
                });
                if with_locals {
                    for k in 1..=l_count {
                        let (multiscale, sources) = if cfg.variant == Variant::LocalDense {
                            (true, (global..global + k).map(ScaleRef::Layer).collect())
                        } else {
                            (false, vec![ScaleRef::Layer(global)])
                        };
                        layers.push(LayerPlan {
                            block,
                            role: LayerRole::Local,
                            multiscale,
                            sources,
                        });
                    }
                }
                block_outputs.push(layers.len() - 1);
            }
        }
        Variant::Dense => {
            let per_block = 1 + l_count;
            for i in 0..cfg.total_depth() {
                let mut sources = vec![ScaleRef::LowLevel];
                sources.extend((0..i).map(ScaleRef::Layer));
                layers.push(LayerPlan {
                    block: i / per_block + 1,
                    role: if i % per_block == 0 {
                        LayerRole::Global
                    } else {
                        LayerRole::Local
                    },
                    multiscale: true,
                    sources,
                });
                if (i + 1) % per_block == 0 {
                    block_outputs.push(i);
                }
            }
        }
        Variant::MulT => {
            let per_block = 1 + l_count;
            let depth = cfg.flat_depth.unwrap_or(cfg.total_depth());
            for i in 0..depth {
                layers.push(LayerPlan {
                    block: i / per_block + 1,
                    role: if i % per_block == 0 {
                        LayerRole::Global
                    } else {
                        LayerRole::Local
                    },
                    multiscale: false,
                    sources: vec![ScaleRef::LowLevel],
                });
                if (i + 1) % per_block == 0 || i + 1 == depth {
                    block_outputs.push(i);
                }
            }
        }
    }

    let graph = ConnectivityGraph {
        variant: cfg.variant,
        layers,
        block_outputs,
    };
    graph.validate()?;
    Ok(graph)
}
