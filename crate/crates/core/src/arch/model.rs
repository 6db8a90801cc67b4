//! Parameter layout and the full forward pass.

use super::attention::Context;
use super::config::{ModelConfig, Task};
use super::connectivity::{build_connectivity, ConnectivityGraph, ScaleRef};
use super::embed::{embed_low_level, EmbedParams};
use super::modality::{Branch, BranchSet, ModalityKind};
use super::unit::{ct_forward, unit_forward, Dropout, MactTrace, UnitParams};
use crate::error::{Error, Result};
use crate::tensor::{Init, ParamId, ParameterStore, Tape, Tensor, Var};

/// Raw features of one modality, optionally zero-padded.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalityInput {
    /// `T x d_m`.
    pub data: Tensor,
    /// `true` on real time steps. Real steps form a prefix. `None` means the
    /// whole sequence is real.
    pub mask: Option<Vec<bool>>,
}

impl ModalityInput {
    pub fn unpadded(data: Tensor) -> Self {
        ModalityInput { data, mask: None }
    }

    pub fn real_len(&self) -> usize {
        match &self.mask {
            Some(m) => m.iter().filter(|v| **v).count(),
            None => self.data.rows(),
        }
    }

    fn check(&self, m: ModalityKind) -> Result<()> {
        if let Some(mask) = &self.mask {
            if mask.len() != self.data.rows() {
                return Err(Error::dim("modality mask", &[self.data.rows()], &[mask.len()]));
            }
            let real = self.real_len();
            if real == 0 {
                return Err(Error::DegenerateMask { row: 0 });
            }
            if mask[..real].iter().any(|v| !v) {
                return Err(Error::Contract(format!(
                    "{} mask must mark a prefix of real steps",
                    m.name()
                )));
            }
        }
        Ok(())
    }
}

/// One model input: a sequence per modality, in [`ModalityKind`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleInputs {
    pub modalities: [ModalityInput; 3],
}

impl SampleInputs {
    pub fn get(&self, m: ModalityKind) -> &ModalityInput {
        &self.modalities[m.index()]
    }

    fn mask(&self, m: ModalityKind) -> Option<&[bool]> {
        self.modalities[m.index()].mask.as_deref()
    }
}

/// Scale hierarchy of one directed branch: `scales[0]` is the target's
/// low-level embedding, `scales[i]` the output of block `i`.
#[derive(Clone, Debug)]
pub struct BranchState {
    pub branch: Branch,
    pub scales: Vec<Var>,
    pub layer_outputs: Vec<Var>,
}

impl BranchState {
    pub fn output(&self) -> Var {
        *self.layer_outputs.last().expect("branches have at least one layer")
    }
}

/// Everything produced by [`Model::forward`].
#[derive(Debug)]
pub struct ForwardOutput {
    /// `1 x C` logits, or `1 x 1` score for regression.
    pub output: Var,
    pub embeddings: [Option<Var>; 3],
    pub branches: Vec<BranchState>,
    /// Per branch, one entry per layer. Filled when [`Context::trace`] is set.
    pub traces: Vec<(Branch, Vec<MactTrace>)>,
}

impl ForwardOutput {
    pub fn branch(&self, b: Branch) -> Option<&BranchState> {
        self.branches.iter().find(|s| s.branch == b)
    }

    pub fn trace(&self, b: Branch) -> Option<&[MactTrace]> {
        self.traces
            .iter()
            .find(|(br, _)| *br == b)
            .map(|(_, t)| t.as_slice())
    }
}

#[derive(Clone, Debug)]
pub struct BranchLayers {
    pub branch: Branch,
    pub units: Vec<UnitParams>,
}

/// Per-target temporal transformer of the prediction module.
#[derive(Clone, Debug)]
pub struct PredictionTarget {
    pub target: ModalityKind,
    /// Branches concatenated feature-wise; empty for a unimodal model.
    pub branches: Vec<Branch>,
    pub width: usize,
    pub units: Vec<UnitParams>,
}

#[derive(Clone, Debug)]
pub struct HeadParams {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub input_dim: usize,
}

/// A full network: configuration, connectivity, layout and weights.
#[derive(Clone, Debug)]
pub struct Model {
    cfg: ModelConfig,
    graph: Option<ConnectivityGraph>,
    params: ParameterStore,
    embeds: [Option<EmbedParams>; 3],
    branches: Vec<BranchLayers>,
    unimodal: Option<Vec<UnitParams>>,
    targets: Vec<PredictionTarget>,
    head: HeadParams,
}

impl Model {
    /// Registers every parameter of `cfg`, initialised from `seed`.
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut params = ParameterStore::new(seed);
        let d = cfg.dim;
        let h = cfg.heads;

        let (graph, active, used): (Option<ConnectivityGraph>, BranchSet, Vec<ModalityKind>) =
            match cfg.unimodal {
                Some(m) => (None, BranchSet::empty(), vec![m]),
                None => {
                    let graph = build_connectivity(&cfg)?;
                    let active = if graph.needs_sibling() {
                        cfg.branches.with_siblings()
                    } else {
                        cfg.branches
                    };
                    let used = active.modalities();
                    (Some(graph), active, used)
                }
            };

        let mut embeds: [Option<EmbedParams>; 3] = [None, None, None];
        for m in used {
            embeds[m.index()] = Some(EmbedParams::register(&mut params, &cfg, m));
        }

        let mut branches = Vec::new();
        if let Some(graph) = &graph {
            for b in active.iter() {
                let units = graph
                    .layers
                    .iter()
                    .enumerate()
                    .map(|(i, plan)| {
                        let prefix = format!("{b}/layer{i}");
                        if plan.multiscale {
                            UnitParams::register_mact(&mut params, &prefix, d, h, plan.sources.len())
                        } else {
                            UnitParams::register_ct(&mut params, &prefix, d, h)
                        }
                    })
                    .collect();
                branches.push(BranchLayers { branch: b, units });
            }
        }

        let unimodal = cfg.unimodal.map(|m| {
            (0..cfg.total_depth())
                .map(|i| UnitParams::register_ct(&mut params, &format!("self/{m}/layer{i}"), d, h))
                .collect()
        });

        let target_groups: Vec<(ModalityKind, Vec<Branch>)> = match cfg.unimodal {
            Some(m) => vec![(m, Vec::new())],
            None => ModalityKind::ALL
                .into_iter()
                .map(|m| (m, cfg.branches.iter().filter(|b| b.target == m).collect::<Vec<_>>()))
                .filter(|(_, bs)| !bs.is_empty())
                .collect(),
        };
        if target_groups.is_empty() {
            return Err(Error::Config("no prediction targets enabled".into()));
        }
        let targets: Vec<PredictionTarget> = target_groups
            .into_iter()
            .map(|(m, bs)| {
                let width = d * bs.len().max(1);
                let units = (0..cfg.prediction_layers)
                    .map(|p| {
                        UnitParams::register_ct(&mut params, &format!("predict/{m}/layer{p}"), width, h)
                    })
                    .collect();
                PredictionTarget {
                    target: m,
                    branches: bs,
                    width,
                    units,
                }
            })
            .collect();

        let input_dim: usize = targets.iter().map(|t| t.width).sum();
        let out_dim = cfg.task.output_dim();
        let head = HeadParams {
            w1: params.register(
                "head/fc1/w",
                input_dim,
                input_dim,
                Init::Glorot {
                    fan_in: input_dim,
                    fan_out: input_dim,
                },
            ),
            b1: params.register("head/fc1/b", 1, input_dim, Init::Zeros),
            w2: params.register(
                "head/fc2/w",
                input_dim,
                out_dim,
                Init::Glorot {
                    fan_in: input_dim,
                    fan_out: out_dim,
                },
            ),
            b2: params.register("head/fc2/b", 1, out_dim, Init::Zeros),
            input_dim,
        };

        Ok(Model {
            cfg,
            graph,
            params,
            embeds,
            branches,
            unimodal,
            targets,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn graph(&self) -> Option<&ConnectivityGraph> {
        self.graph.as_ref()
    }

    pub fn params(&self) -> &ParameterStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterStore {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.scalar_count()
    }

    pub fn embed_params(&self, m: ModalityKind) -> Option<&EmbedParams> {
        self.embeds[m.index()].as_ref()
    }

    /// Layers of a computed branch (enabled, or required as a sibling).
    pub fn branch_units(&self, b: Branch) -> Option<&[UnitParams]> {
        self.branches
            .iter()
            .find(|l| l.branch == b)
            .map(|l| l.units.as_slice())
    }

    /// Branches that are computed during a forward pass.
    pub fn active_branches(&self) -> Vec<Branch> {
        self.branches.iter().map(|l| l.branch).collect()
    }

    pub fn prediction_targets(&self) -> &[PredictionTarget] {
        &self.targets
    }

    pub fn head(&self) -> &HeadParams {
        &self.head
    }

    fn dropout(&self) -> Dropout {
        Dropout {
            attn: self.cfg.attn_dropout,
            fc: self.cfg.fc_dropout,
        }
    }

    /// Low-level embedding of every modality the model reads.
    pub fn embed(&self, tape: &mut Tape, inputs: &SampleInputs) -> Result<[Option<Var>; 3]> {
        let mut out = [None, None, None];
        for m in ModalityKind::ALL {
            if let Some(p) = &self.embeds[m.index()] {
                let input = inputs.get(m);
                input.check(m)?;
                let x = tape.leaf(input.data.clone());
                out[m.index()] = Some(embed_low_level(tape, &self.params, p, x, &self.cfg)?);
            }
        }
        Ok(out)
    }

    /// Runs every computed branch in level-synchronous lockstep: layer `i`
    /// of all branches, then layer `i + 1`. Both directions of a pair
    /// therefore see each other's freshly computed representations.
    pub fn cooperative_forward(
        &self,
        tape: &mut Tape,
        embeddings: &[Option<Var>; 3],
        inputs: &SampleInputs,
        ctx: &mut Context,
    ) -> Result<(Vec<BranchState>, Vec<(Branch, Vec<MactTrace>)>)> {
        let graph = self
            .graph
            .as_ref()
            .ok_or_else(|| Error::Contract("unimodal model has no crossmodal branches".into()))?;
        let emb = |m: ModalityKind| {
            embeddings[m.index()]
                .ok_or_else(|| Error::Scheduling(format!("{} embedding missing", m.name())))
        };
        let n = self.branches.len();
        let mut outputs: Vec<Vec<Var>> = vec![Vec::with_capacity(graph.depth()); n];
        let mut traces: Vec<Vec<MactTrace>> = vec![Vec::new(); n];
        let sibling_of: Vec<Option<usize>> = self
            .branches
            .iter()
            .map(|l| {
                self.branches
                    .iter()
                    .position(|o| o.branch == l.branch.sibling())
            })
            .collect();

        for (i, plan) in graph.layers.iter().enumerate() {
            for (bi, layers) in self.branches.iter().enumerate() {
                let b = layers.branch;
                let prev = if i == 0 {
                    emb(b.target)?
                } else {
                    outputs[bi][i - 1]
                };
                let mut sources = Vec::with_capacity(plan.sources.len());
                for r in &plan.sources {
                    sources.push(match *r {
                        ScaleRef::LowLevel => emb(b.source)?,
                        ScaleRef::Layer(j) => {
                            let sib = sibling_of[bi].ok_or_else(|| {
                                Error::Scheduling(format!("branch {b} has no computed sibling"))
                            })?;
                            *outputs[sib].get(j).ok_or_else(|| {
                                Error::Scheduling(format!(
                                    "branch {b} layer {i} needs sibling layer {j}, not yet computed"
                                ))
                            })?
                        }
                    });
                }
                let (out, trace) = unit_forward(
                    tape,
                    &self.params,
                    &layers.units[i],
                    prev,
                    &sources,
                    inputs.mask(b.source),
                    self.dropout(),
                    ctx,
                )?;
                outputs[bi].push(out);
                if let Some(t) = trace {
                    traces[bi].push(t);
                }
            }
        }

        let states = self
            .branches
            .iter()
            .zip(outputs)
            .map(|(l, outs)| {
                let mut scales = vec![embeddings[l.branch.target.index()].expect("checked above")];
                scales.extend(graph.block_outputs.iter().map(|&o| outs[o]));
                BranchState {
                    branch: l.branch,
                    scales,
                    layer_outputs: outs,
                }
            })
            .collect();
        let traces = self
            .branches
            .iter()
            .map(|l| l.branch)
            .zip(traces)
            .collect();
        Ok((states, traces))
    }

    fn unimodal_forward(
        &self,
        tape: &mut Tape,
        embeddings: &[Option<Var>; 3],
        inputs: &SampleInputs,
        ctx: &mut Context,
    ) -> Result<Var> {
        let (m, units) = match (self.cfg.unimodal, &self.unimodal) {
            (Some(m), Some(u)) => (m, u),
            _ => return Err(Error::Contract("model is not unimodal".into())),
        };
        let mut z = embeddings[m.index()].expect("unimodal embedding registered");
        for unit in units {
            z = ct_forward(tape, &self.params, unit, z, z, inputs.mask(m), self.dropout(), ctx)?.0;
        }
        Ok(z)
    }

    /// Prediction module: per target, concatenate its branch outputs, run the
    /// target's temporal transformer, keep the last real step; concatenate the
    /// targets and apply the two-layer head.
    pub fn predict(
        &self,
        tape: &mut Tape,
        finals: &[(Branch, Var)],
        unimodal: Option<Var>,
        inputs: &SampleInputs,
        ctx: &mut Context,
    ) -> Result<Var> {
        let mut pooled = Vec::with_capacity(self.targets.len());
        for t in &self.targets {
            let mut z = if t.branches.is_empty() {
                unimodal.ok_or_else(|| Error::Contract("missing unimodal stream".into()))?
            } else {
                let parts = t
                    .branches
                    .iter()
                    .map(|b| {
                        finals
                            .iter()
                            .find(|(fb, _)| fb == b)
                            .map(|(_, v)| *v)
                            .ok_or_else(|| Error::Contract(format!("branch {b} did not reach the last block")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if parts.len() == 1 {
                    parts[0]
                } else {
                    tape.concat_cols(&parts)?
                }
            };
            let mask = inputs.mask(t.target);
            for unit in &t.units {
                z = ct_forward(tape, &self.params, unit, z, z, mask, self.dropout(), ctx)?.0;
            }
            let last = inputs.get(t.target).real_len() - 1;
            pooled.push(tape.select_row(z, last)?);
        }
        let features = if pooled.len() == 1 {
            pooled[0]
        } else {
            tape.concat_cols(&pooled)?
        };
        let h = &self.head;
        let w1 = tape.param(h.w1, self.params.get(h.w1));
        let b1 = tape.param(h.b1, self.params.get(h.b1));
        let w2 = tape.param(h.w2, self.params.get(h.w2));
        let b2 = tape.param(h.b2, self.params.get(h.b2));
        let hidden = tape.matmul(features, w1)?;
        let hidden = tape.add_row(hidden, b1)?;
        let hidden = tape.relu(hidden);
        let hidden = tape.dropout(hidden, self.cfg.fc_dropout, ctx.training, &mut ctx.rng)?;
        let out = tape.matmul(hidden, w2)?;
        tape.add_row(out, b2)
    }

    /// Full forward pass of one (possibly padded) sample.
    pub fn forward(&self, tape: &mut Tape, inputs: &SampleInputs, ctx: &mut Context) -> Result<ForwardOutput> {
        for m in ModalityKind::ALL {
            if self.embeds[m.index()].is_some() {
                inputs.get(m).check(m)?;
            }
        }
        let embeddings = self.embed(tape, inputs)?;
        if self.cfg.unimodal.is_some() {
            let z = self.unimodal_forward(tape, &embeddings, inputs, ctx)?;
            let output = self.predict(tape, &[], Some(z), inputs, ctx)?;
            return Ok(ForwardOutput {
                output,
                embeddings,
                branches: Vec::new(),
                traces: Vec::new(),
            });
        }
        let (branches, traces) = self.cooperative_forward(tape, &embeddings, inputs, ctx)?;
        let finals: Vec<(Branch, Var)> = branches.iter().map(|s| (s.branch, s.output())).collect();
        let output = self.predict(tape, &finals, None, inputs, ctx)?;
        Ok(ForwardOutput {
            output,
            embeddings,
            branches,
            traces,
        })
    }

    /// Evaluation-mode output values for one sample.
    pub fn infer(&self, inputs: &SampleInputs) -> Result<Tensor> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, inputs, &mut Context::eval())?;
        Ok(tape.value(out.output).clone())
    }

    pub fn task(&self) -> Task {
        self.cfg.task
    }
}

/// Exact number of trainable scalars of a configuration.
pub fn count_parameters(cfg: &ModelConfig) -> Result<usize> {
    Ok(Model::new(cfg.clone(), 0)?.parameter_count())
}
