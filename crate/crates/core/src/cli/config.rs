//! Flat `key=value` run configuration.
//!
//! Resolution order is defaults, then the config file, then command-line
//! overrides. Every key is listed in [`KEYS`]; anything else is rejected.
//! [`RunConfig::render`] writes a file that parses back to the same value.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::arch::{Branch, BranchSet, ModalityKind, ModelConfig, Task, Variant};
use crate::data::{LabelKind, SyntheticSpec};
use crate::error::{Error, Result};
use crate::train::{AblationAxis, LossKind, TrainConfig};

/// Every accepted key, in rendering order.
pub const KEYS: &[&str] = &[
    "dim",
    "heads",
    "blocks",
    "layers",
    "variant",
    "kernels",
    "input_dims",
    "attn_dropout",
    "fc_dropout",
    "branches",
    "unimodal",
    "classes",
    "task",
    "prediction_layers",
    "positional_encoding",
    "flat_depth",
    "epochs",
    "batch_size",
    "learning_rate",
    "clip",
    "loss",
    "seed",
    "patience",
    "samples",
    "lengths",
    "snr",
    "motif_len",
    "audio_agreement",
    "labels",
    "data_seed",
    "split",
    "split_seed",
    "dataset",
    "out",
    "params",
    "axis",
    "seeds",
    "branch",
    "block_index",
    "head_index",
    "scale_index",
    "sample_index",
    "grad_step",
    "grad_tolerance",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// `train.seed` also seeds parameter initialisation.
    pub train: TrainConfig,
    pub data: SyntheticSpec,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub split_seed: u64,
    /// Dataset directory to load instead of generating synthetic data.
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    /// Parameter file for `eval` and `export-attn`; defaults to
    /// `<out>/params.json`.
    pub params: Option<PathBuf>,
    pub axis: AblationAxis,
    pub seeds: Vec<u64>,
    pub branch: Branch,
    /// 1-based.
    pub block_index: usize,
    pub head_index: usize,
    pub scale_index: usize,
    pub sample_index: usize,
    pub grad_step: f64,
    pub grad_tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            data: SyntheticSpec::default(),
            split: [0.6, 0.2, 0.2],
            split_seed: 1,
            dataset: None,
            out: PathBuf::from("mcmult-out"),
            params: None,
            axis: AblationAxis::Variants,
            seeds: vec![0],
            branch: Branch::new(ModalityKind::Vision, ModalityKind::Text),
            block_index: 1,
            head_index: 0,
            scale_index: 0,
            sample_index: 0,
            grad_step: 1e-4,
            grad_tolerance: 1e-4,
        }
    }
}

fn bad(key: &str, expected: &str, value: &str) -> Error {
    Error::Config(format!("key {key}: expected {expected}, got {value:?}"))
}

fn num<T: FromStr>(key: &str, value: &str, expected: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, expected, value))
}

fn uint(key: &str, value: &str) -> Result<usize> {
    num(key, value, "a non-negative integer")
}

fn real(key: &str, value: &str) -> Result<f64> {
    num(key, value, "a number")
}

fn optional<T>(value: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
    if value.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        f(value).map(Some)
    }
}

fn triple<T: Copy + Default>(key: &str, value: &str, f: impl Fn(&str) -> Result<T>) -> Result<[T; 3]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad(key, "three comma-separated values (L,V,A)", value));
    }
    let mut out = [T::default(); 3];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = f(p)?;
    }
    Ok(out)
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(bad(key, "true or false", value)),
    }
}

fn branch_set(value: &str) -> Result<BranchSet> {
    if value.eq_ignore_ascii_case("all") {
        return Ok(BranchSet::all());
    }
    let branches = value
        .split(',')
        .map(|b| b.trim().parse::<Branch>())
        .collect::<Result<Vec<_>>>()?;
    Ok(BranchSet::from_branches(branches))
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

impl RunConfig {
    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "dim" => self.model.dim = uint(key, v)?,
            "heads" => self.model.heads = uint(key, v)?,
            "blocks" => self.model.blocks = uint(key, v)?,
            "layers" => self.model.layers_per_block = uint(key, v)?,
            "variant" => self.model.variant = v.parse::<Variant>()?,
            "kernels" => self.model.kernels = triple(key, v, |p| uint(key, p))?,
            "input_dims" => {
                let dims = triple(key, v, |p| uint(key, p))?;
                self.model.input_dims = dims;
                self.data.dims = dims;
            }
            "attn_dropout" => self.model.attn_dropout = real(key, v)?,
            "fc_dropout" => self.model.fc_dropout = real(key, v)?,
            "branches" => self.model.branches = branch_set(v)?,
            "unimodal" => self.model.unimodal = optional(v, |s| s.parse::<ModalityKind>())?,
            "classes" => {
                let c = uint(key, v)?;
                self.data.classes = c;
                if let Task::Classification { .. } = self.model.task {
                    self.model.task = Task::Classification { classes: c };
                }
            }
            "task" => {
                self.model.task = match v.to_ascii_lowercase().as_str() {
                    "classification" => Task::Classification {
                        classes: self.data.classes,
                    },
                    "regression" => Task::Regression,
                    _ => return Err(bad(key, "classification or regression", v)),
                }
            }
            "prediction_layers" => self.model.prediction_layers = uint(key, v)?,
            "positional_encoding" => self.model.positional_encoding = boolean(key, v)?,
            "flat_depth" => self.model.flat_depth = optional(v, |s| uint(key, s))?,
            "epochs" => self.train.epochs = uint(key, v)?,
            "batch_size" => self.train.batch_size = uint(key, v)?,
            "learning_rate" => self.train.learning_rate = real(key, v)?,
            "clip" => self.train.clip = real(key, v)?,
            "loss" => self.train.loss = v.parse::<LossKind>()?,
            "seed" => self.train.seed = num(key, v, "a non-negative integer")?,
            "patience" => self.train.patience = optional(v, |s| uint(key, s))?,
            "samples" => self.data.samples = uint(key, v)?,
            "lengths" => {
                self.data.lengths = triple(key, v, |p| {
                    let (lo, hi) = p.split_once('-').ok_or_else(|| bad(key, "ranges like 6-10", p))?;
                    Ok((uint(key, lo.trim())?, uint(key, hi.trim())?))
                })?
            }
            "snr" => self.data.snr = real(key, v)?,
            "motif_len" => self.data.motif_len = uint(key, v)?,
            "audio_agreement" => self.data.audio_agreement = real(key, v)?,
            "labels" => {
                self.data.label_kind = match v.to_ascii_lowercase().as_str() {
                    "class" => LabelKind::Class,
                    "score" => LabelKind::Score,
                    _ => return Err(bad(key, "class or score", v)),
                }
            }
            "data_seed" => self.data.seed = num(key, v, "a non-negative integer")?,
            "split" => self.split = triple(key, v, |p| real(key, p))?,
            "split_seed" => self.split_seed = num(key, v, "a non-negative integer")?,
            "dataset" => self.dataset = optional(v, |s| Ok(PathBuf::from(s)))?,
            "out" => self.out = PathBuf::from(v),
            "params" => self.params = optional(v, |s| Ok(PathBuf::from(s)))?,
            "axis" => self.axis = v.parse::<AblationAxis>()?,
            "seeds" => {
                self.seeds = v
                    .split(',')
                    .map(|s| num(key, s.trim(), "comma-separated non-negative integers"))
                    .collect::<Result<_>>()?
            }
            "branch" => self.branch = v.parse::<Branch>()?,
            "block_index" => self.block_index = uint(key, v)?,
            "head_index" => self.head_index = uint(key, v)?,
            "scale_index" => self.scale_index = uint(key, v)?,
            "sample_index" => self.sample_index = uint(key, v)?,
            "grad_step" => self.grad_step = real(key, v)?,
            "grad_tolerance" => self.grad_tolerance = real(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every assignment of a config file body. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.data.validate()?;
        match (self.model.task, self.train.loss, self.data.label_kind) {
            (Task::Classification { .. }, LossKind::CrossEntropy, LabelKind::Class) => {}
            (Task::Regression, LossKind::L1Regression, LabelKind::Score) => {}
            (task, loss, labels) => {
                return Err(Error::Config(format!(
                    "task {task:?}, loss {loss} and labels {} do not fit together",
                    labels.name()
                )))
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if !(self.grad_step > 0.0 && self.grad_tolerance > 0.0) {
            return Err(Error::Config("grad_step and grad_tolerance must be positive".into()));
        }
        Ok(())
    }

    /// The config as a file body that parses back to `self`.
    pub fn render(&self) -> String {
        let m = &self.model;
        let t = &self.train;
        let d = &self.data;
        let mut s = String::new();
        for key in KEYS {
            let value = match *key {
                "dim" => m.dim.to_string(),
                "heads" => m.heads.to_string(),
                "blocks" => m.blocks.to_string(),
                "layers" => m.layers_per_block.to_string(),
                "variant" => m.variant.to_string(),
                "kernels" => join(&m.kernels),
                "input_dims" => join(&m.input_dims),
                "attn_dropout" => m.attn_dropout.to_string(),
                "fc_dropout" => m.fc_dropout.to_string(),
                "branches" => m.branches.to_string(),
                "unimodal" => show_opt(&m.unimodal),
                "classes" => d.classes.to_string(),
                "task" => match m.task {
                    Task::Classification { .. } => "classification".into(),
                    Task::Regression => "regression".into(),
                },
                "prediction_layers" => m.prediction_layers.to_string(),
                "positional_encoding" => m.positional_encoding.to_string(),
                "flat_depth" => show_opt(&m.flat_depth),
                "epochs" => t.epochs.to_string(),
                "batch_size" => t.batch_size.to_string(),
                "learning_rate" => t.learning_rate.to_string(),
                "clip" => t.clip.to_string(),
                "loss" => t.loss.to_string(),
                "seed" => t.seed.to_string(),
                "patience" => show_opt(&t.patience),
                "samples" => d.samples.to_string(),
                "lengths" => d
                    .lengths
                    .iter()
                    .map(|(lo, hi)| format!("{lo}-{hi}"))
                    .collect::<Vec<_>>()
                    .join(","),
                "snr" => d.snr.to_string(),
                "motif_len" => d.motif_len.to_string(),
                "audio_agreement" => d.audio_agreement.to_string(),
                "labels" => d.label_kind.name().into(),
                "data_seed" => d.seed.to_string(),
                "split" => join(&self.split),
                "split_seed" => self.split_seed.to_string(),
                "dataset" => show_opt(&self.dataset.as_ref().map(|p| p.display().to_string())),
                "out" => self.out.display().to_string(),
                "params" => show_opt(&self.params.as_ref().map(|p| p.display().to_string())),
                "axis" => self.axis.to_string(),
                "seeds" => join(&self.seeds),
                "branch" => self.branch.to_string(),
                "block_index" => self.block_index.to_string(),
                "head_index" => self.head_index.to_string(),
                "scale_index" => self.scale_index.to_string(),
                "sample_index" => self.sample_index.to_string(),
                "grad_step" => self.grad_step.to_string(),
                "grad_tolerance" => self.grad_tolerance.to_string(),
                other => unreachable!("key {other} has no renderer"),
            };
            let _ = writeln!(s, "{key}={value}");
        }
        s
    }

    pub fn params_path(&self) -> PathBuf {
        self.params.clone().unwrap_or_else(|| self.out.join("params.json"))
    }
}

/// Defaults, then `file`, then `overrides` in order; the result is
/// validated.
pub fn parse_config(file: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = file {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.apply_text(&text)?;
    }
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
