use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use super::metrics::MetricsReport;
use super::trainer::{evaluate, train, TrainConfig};
use crate::arch::{BranchSet, ModalityKind, Model, ModelConfig, Variant};
use crate::data::{MultimodalSample, Split};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblationAxis {
    /// The five connectivity variants, MulT at matched depth.
    Variants,
    /// MulT at several flat depths.
    Depth,
    /// Unimodal, single-target and full configurations.
    Branches,
    /// Block counts 1..=5, then layer counts 1..=4.
    Hyperparams,
}

impl AblationAxis {
    pub const ALL: [AblationAxis; 4] = [
        AblationAxis::Variants,
        AblationAxis::Depth,
        AblationAxis::Branches,
        AblationAxis::Hyperparams,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationAxis::Variants => "variants",
            AblationAxis::Depth => "depth",
            AblationAxis::Branches => "branches",
            AblationAxis::Hyperparams => "hyperparams",
        }
    }
}

impl fmt::Display for AblationAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "variants" | "variant" => Ok(AblationAxis::Variants),
            "depth" => Ok(AblationAxis::Depth),
            "branches" | "branch" => Ok(AblationAxis::Branches),
            "hyperparams" | "bl" | "b/l" => Ok(AblationAxis::Hyperparams),
            _ => Err(Error::Config(format!("unknown ablation axis {s:?}"))),
        }
    }
}

/// Flat depths compared on the depth axis.
pub const MULT_DEPTHS: [usize; 4] = [5, 7, 10, 12];

#[derive(Clone, Debug, PartialEq)]
pub struct Arm {
    pub name: String,
    pub config: ModelConfig,
}

fn arm(name: impl Into<String>, config: ModelConfig) -> Arm {
    Arm {
        name: name.into(),
        config,
    }
}

/// The model configurations compared along `axis`.
pub fn arms(base: &ModelConfig, axis: AblationAxis) -> Vec<Arm> {
    let with = |f: &dyn Fn(&mut ModelConfig)| {
        let mut c = base.clone();
        c.unimodal = None;
        f(&mut c);
        c
    };
    match axis {
        AblationAxis::Variants => [
            Variant::MCMulT,
            Variant::Dense,
            Variant::LocalDense,
            Variant::Global,
            Variant::MulT,
        ]
        .into_iter()
        .map(|v| {
            arm(
                v.name(),
                with(&|c| {
                    c.variant = v;
                    c.flat_depth = None;
                }),
            )
        })
        .collect(),
        AblationAxis::Depth => MULT_DEPTHS
            .into_iter()
            .map(|d| {
                arm(
                    format!("MulT-{d}"),
                    with(&|c| {
                        c.variant = Variant::MulT;
                        c.flat_depth = Some(d);
                    }),
                )
            })
            .collect(),
        AblationAxis::Branches => {
            let mut out: Vec<Arm> = ModalityKind::ALL
                .into_iter()
                .map(|m| arm(format!("{} only", m.name()), with(&|c| c.unimodal = Some(m))))
                .collect();
            for m in ModalityKind::ALL {
                let others: Vec<char> = ModalityKind::ALL
                    .into_iter()
                    .filter(|o| *o != m)
                    .map(|o| o.letter())
                    .collect();
                out.push(arm(
                    format!("{}+{}->{}", others[0], others[1], m.letter()),
                    with(&|c| c.branches = BranchSet::targeting(m)),
                ));
            }
            out.push(arm("full", with(&|c| c.branches = BranchSet::all())));
            out
        }
        AblationAxis::Hyperparams => {
            let mut out: Vec<Arm> = (1..=5)
                .map(|b| arm(format!("B={b}"), with(&|c| c.blocks = b)))
                .collect();
            out.extend((1..=4).map(|l| arm(format!("L={l}"), with(&|c| c.layers_per_block = l))));
            out
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ArmOutcome {
    Finished { metrics: MetricsReport, params: usize },
    Failed { reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub arm: String,
    pub seed: u64,
    pub outcome: ArmOutcome,
    pub wall_seconds: f64,
}

impl AblationRow {
    /// One line of [`AblationTable::to_csv`], without the newline.
    pub fn csv_row(&self) -> String {
        let body = match &self.outcome {
            ArmOutcome::Finished { metrics, params } => format!("{},{params}", metrics.csv_row()),
            ArmOutcome::Failed { .. } => [AblationTable::FAILURE_MARKER; 6].join(","),
        };
        format!("{},{},{body},{}", self.arm, self.seed, self.wall_seconds)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub const CSV_HEADER: &'static str = "arm,seed,acc7,acc2,f1,mae,corr,params,wall_seconds";
    /// Written into every metric column of a failed arm.
    pub const FAILURE_MARKER: &'static str = "FAILED";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.csv_row());
        }
        s
    }
}

/// Trains and tests every arm of `axis` for every seed on the same split.
/// Parameters are seeded per seed and named per layer, so arms share the
/// initial values of every identically shaped parameter. A failing arm is
/// recorded and the run continues.
pub fn ablation_run(
    base: &ModelConfig,
    train_cfg: &TrainConfig,
    axis: AblationAxis,
    seeds: &[u64],
    data: &Split<MultimodalSample>,
    mut progress: impl FnMut(&AblationRow),
) -> Result<AblationTable> {
    if seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    if data.test.is_empty() {
        return Err(Error::Contract("ablation needs a non-empty test split".into()));
    }
    let mut table = AblationTable::default();
    for a in arms(base, axis) {
        for &seed in seeds {
            let start = Instant::now();
            let outcome = run_arm(&a.config, train_cfg, seed, data).unwrap_or_else(|e| ArmOutcome::Failed {
                reason: e.to_string(),
            });
            let row = AblationRow {
                arm: a.name.clone(),
                seed,
                outcome,
                wall_seconds: start.elapsed().as_secs_f64(),
            };
            progress(&row);
            table.rows.push(row);
        }
    }
    Ok(table)
}

fn run_arm(cfg: &ModelConfig, train_cfg: &TrainConfig, seed: u64, data: &Split<MultimodalSample>) -> Result<ArmOutcome> {
    let mut model = Model::new(cfg.clone(), seed)?;
    let tc = TrainConfig {
        seed,
        ..train_cfg.clone()
    };
    train(&mut model, &data.train, &data.valid, &tc)?;
    Ok(ArmOutcome::Finished {
        metrics: evaluate(&model, &data.test)?,
        params: model.parameter_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arm_counts() {
        let base = ModelConfig::default();
        assert_eq!(arms(&base, AblationAxis::Variants).len(), 5);
        assert_eq!(arms(&base, AblationAxis::Depth).len(), 4);
        assert_eq!(arms(&base, AblationAxis::Branches).len(), 7);
        let hp = arms(&base, AblationAxis::Hyperparams);
        assert_eq!(hp.iter().filter(|a| a.name.starts_with("B=")).count(), 5);
        assert_eq!(hp.iter().filter(|a| a.name.starts_with("L=")).count(), 4);
    }

    #[test]
    fn branch_arms_cover_unimodal_and_single_target() {
        let names: Vec<String> = arms(&ModelConfig::default(), AblationAxis::Branches)
            .into_iter()
            .map(|a| a.name)
            .collect();
        assert_eq!(
            names,
            ["text only", "vision only", "audio only", "V+A->L", "L+A->V", "L+V->A", "full"]
        );
    }

    #[test]
    fn every_arm_is_a_valid_model() {
        let base = ModelConfig {
            blocks: 2,
            layers_per_block: 1,
            ..Default::default()
        };
        for axis in AblationAxis::ALL {
            for a in arms(&base, axis) {
                Model::new(a.config, 0).unwrap_or_else(|e| panic!("{}: {e}", a.name));
            }
        }
    }

    #[test]
    fn failure_marker_fills_metric_columns() {
        let table = AblationTable {
            rows: vec![AblationRow {
                arm: "x".into(),
                seed: 1,
                outcome: ArmOutcome::Failed { reason: "boom".into() },
                wall_seconds: 0.5,
            }],
        };
        let csv = table.to_csv();
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line, "x,1,FAILED,FAILED,FAILED,FAILED,FAILED,FAILED,0.5");
        assert_eq!(line.split(',').count(), AblationTable::CSV_HEADER.split(',').count());
    }
}
