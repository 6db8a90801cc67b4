use std::fmt;
use std::str::FromStr;

use super::modality::{BranchSet, ModalityKind};
use crate::error::{Error, Result};

/// Connectivity pattern between the two directions of a modality pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Blocks of one multi-scale layer (global edges) plus `L` single-scale
    /// layers (local edges).
    MCMulT,
    /// Every layer attends every preceding sibling layer.
    Dense,
    /// Block-level global edges plus dense local edges inside each block.
    LocalDense,
    /// Blocks with their local layers removed.
    Global,
    /// Flat stack of single-scale layers that only read the source's
    /// low-level features.
    MulT,
}

impl Variant {
    /// All variants in descending order of parameter count.
    pub const ALL: [Variant; 5] = [
        Variant::Dense,
        Variant::LocalDense,
        Variant::MCMulT,
        Variant::MulT,
        Variant::Global,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::MCMulT => "MCMulT",
            Variant::Dense => "Dense",
            Variant::LocalDense => "LocalDense",
            Variant::Global => "Global",
            Variant::MulT => "MulT",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "mcmult" => Ok(Variant::MCMulT),
            "dense" | "mcmultdense" => Ok(Variant::Dense),
            "localdense" | "mcmultlocaldense" => Ok(Variant::LocalDense),
            "global" | "mcmultglobal" => Ok(Variant::Global),
            "mult" => Ok(Variant::MulT),
            _ => Err(Error::Config(format!("unknown variant {s:?}"))),
        }
    }
}

/// What the head predicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Classification { classes: usize },
    /// A single sentiment score.
    Regression,
}

impl Task {
    pub fn output_dim(self) -> usize {
        match self {
            Task::Classification { classes } => classes,
            Task::Regression => 1,
        }
    }
}

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Common model width `d`.
    pub dim: usize,
    pub heads: usize,
    pub blocks: usize,
    /// Single-scale layers per block.
    pub layers_per_block: usize,
    pub variant: Variant,
    /// Temporal convolution widths, indexed by [`ModalityKind::index`].
    pub kernels: [usize; 3],
    /// Raw feature widths, indexed by [`ModalityKind::index`].
    pub input_dims: [usize; 3],
    pub attn_dropout: f64,
    pub fc_dropout: f64,
    pub branches: BranchSet,
    /// When set, the model is a self-attention stack over this modality
    /// alone and `branches` is ignored.
    pub unimodal: Option<ModalityKind>,
    pub task: Task,
    pub prediction_layers: usize,
    pub positional_encoding: bool,
    /// Depth override for [`Variant::MulT`]; defaults to `blocks * (1 + layers_per_block)`.
    pub flat_depth: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 8,
            heads: 2,
            blocks: 4,
            layers_per_block: 3,
            variant: Variant::MCMulT,
            kernels: [3, 3, 3],
            input_dims: [8, 6, 4],
            attn_dropout: 0.2,
            fc_dropout: 0.1,
            branches: BranchSet::all(),
            unimodal: None,
            task: Task::Classification { classes: 2 },
            prediction_layers: 1,
            positional_encoding: true,
            flat_depth: None,
        }
    }
}

impl ModelConfig {
    /// Per-branch layer count of the matched-depth stacks.
    pub fn total_depth(&self) -> usize {
        self.blocks * (1 + self.layers_per_block)
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.dim == 0 || self.heads == 0 || self.blocks == 0 {
            return fail("dim, heads and blocks must be positive".into());
        }
        if self.dim % self.heads != 0 {
            return fail(format!("heads {} must divide dim {}", self.heads, self.dim));
        }
        if self.positional_encoding && self.dim % 2 != 0 {
            return fail(format!("positional encoding needs an even dim, got {}", self.dim));
        }
        if let Some(k) = self.kernels.iter().find(|k| **k % 2 == 0) {
            return fail(format!("convolution widths must be odd, got {k}"));
        }
        if self.input_dims.contains(&0) {
            return fail("input dims must be positive".into());
        }
        for (name, rate) in [("attn_dropout", self.attn_dropout), ("fc_dropout", self.fc_dropout)] {
            if !(0.0..1.0).contains(&rate) {
                return fail(format!("{name} must lie in [0, 1), got {rate}"));
            }
        }
        if self.unimodal.is_none() && self.branches.is_empty() {
            return fail("at least one branch must be enabled".into());
        }
        if self.prediction_layers == 0 {
            return fail("prediction_layers must be positive".into());
        }
        if let Task::Classification { classes } = self.task {
            if classes < 2 {
                return fail(format!("classification needs at least 2 classes, got {classes}"));
            }
        }
        if self.flat_depth == Some(0) {
            return fail("flat_depth must be positive".into());
        }
        Ok(())
    }
}
