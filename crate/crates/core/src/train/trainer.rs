use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{cross_entropy, l1_regression, LossKind};
use super::metrics::{compute_metrics, MetricsReport};
use crate::arch::{Context, Model, SampleInputs, Task};
use crate::data::{batch_and_pad, class_to_score, Label, MultimodalSample};
use crate::error::{Error, Result};
use crate::tensor::{clip_global_norm, AdamState, ParameterStore, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Maximum global gradient norm.
    pub clip: f64,
    pub loss: LossKind,
    pub seed: u64,
    /// Stop after this many epochs without a validation Acc2 improvement.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            clip: 0.8,
            loss: LossKind::CrossEntropy,
            seed: 0,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.clip > 0.0) {
            return Err(Error::Config(format!("clip must be positive, got {}", self.clip)));
        }
        if self.patience == Some(0) {
            return Err(Error::Config("patience must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-sample training loss, dropout active.
    pub train_loss: f64,
    pub valid: Option<MetricsReport>,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept; `None` if no validation set.
    pub best_epoch: Option<usize>,
    /// Set when patience ran out before the epoch budget.
    pub stopped_early: bool,
}

impl RunHistory {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,acc7,acc2,f1,mae,corr,wall_seconds";

    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for e in &self.epochs {
            let metrics = e.valid.map_or_else(|| ",,,,".to_string(), |m| m.csv_row());
            let _ = writeln!(s, "{},{},{},{}", e.epoch, e.train_loss, metrics, e.wall_seconds);
        }
        s
    }
}

fn check_compat(model: &Model, loss: LossKind, samples: &[MultimodalSample]) -> Result<()> {
    match (model.task(), loss) {
        (Task::Classification { classes }, LossKind::CrossEntropy) => {
            for s in samples {
                match s.label {
                    Label::Class(c) if c < classes => {}
                    other => {
                        return Err(Error::Config(format!(
                            "label {other:?} does not fit a {classes}-class head"
                        )))
                    }
                }
            }
            Ok(())
        }
        (Task::Regression, LossKind::L1Regression) => {
            if samples.iter().any(|s| matches!(s.label, Label::Class(_))) {
                return Err(Error::Config("regression training needs score labels".into()));
            }
            Ok(())
        }
        (task, loss) => Err(Error::Config(format!("loss {loss} does not match task {task:?}"))),
    }
}

pub(crate) fn sample_loss(tape: &mut Tape, loss: LossKind, output: Var, label: Label) -> Result<Var> {
    match (loss, label) {
        (LossKind::CrossEntropy, Label::Class(c)) => cross_entropy(tape, output, c),
        (LossKind::L1Regression, Label::Score(s)) => l1_regression(tape, output, s),
        (loss, label) => Err(Error::Contract(format!("{loss} cannot train on {label:?}"))),
    }
}

/// Mean loss of one batch, recorded on `tape`.
fn batch_loss(
    model: &Model,
    tape: &mut Tape,
    members: &[(SampleInputs, Label)],
    loss: LossKind,
    ctx: &mut Context,
) -> Result<Var> {
    let mut total: Option<Var> = None;
    for (inputs, label) in members {
        let out = model.forward(tape, inputs, ctx)?.output;
        let l = sample_loss(tape, loss, out, *label)?;
        total = Some(match total {
            None => l,
            Some(acc) => tape.add(acc, l)?,
        });
    }
    let total = total.ok_or_else(|| Error::Contract("empty batch".into()))?;
    Ok(tape.scale(total, 1.0 / members.len() as f64))
}

/// Trains `model` in place with Adam and global-norm clipping, keeping the
/// parameters of the best validation Acc2 epoch when `valid` is non-empty.
pub fn train(
    model: &mut Model,
    train_set: &[MultimodalSample],
    valid: &[MultimodalSample],
    cfg: &TrainConfig,
) -> Result<RunHistory> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Contract("training set is empty".into()));
    }
    check_compat(model, cfg.loss, train_set)?;
    check_compat(model, cfg.loss, valid)?;

    let mut adam = AdamState::new(model.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = RunHistory::default();
    let mut best: Option<(f64, ParameterStore)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let shuffle = cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(epoch as u64);
        let batches = batch_and_pad(train_set, cfg.batch_size, Some(shuffle))?;
        let mut loss_sum = 0.0;
        for (bi, batch) in batches.iter().enumerate() {
            let members: Vec<(SampleInputs, Label)> =
                (0..batch.len()).map(|n| (batch.inputs(n), batch.labels[n])).collect();
            let mut tape = Tape::new();
            let mut ctx = Context::train(ChaCha8Rng::from_rng(&mut rng));
            let loss = batch_loss(model, &mut tape, &members, cfg.loss, &mut ctx)?;
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: bi + 1 });
            }
            loss_sum += value * batch.len() as f64;
            let grads = tape.backward(loss)?;
            let mut grads = model.params().collect_grads(&tape, &grads);
            clip_global_norm(&mut grads, cfg.clip);
            adam.step(model.params_mut(), &grads, cfg.learning_rate)?;
        }

        let valid_metrics = if valid.is_empty() {
            None
        } else {
            Some(evaluate(model, valid)?)
        };
        if let Some(m) = valid_metrics {
            if best.as_ref().is_none_or(|(acc, _)| m.acc2 > *acc) {
                best = Some((m.acc2, model.params().clone()));
                history.best_epoch = Some(epoch);
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            valid: valid_metrics,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
        if cfg.patience.is_some_and(|p| since_best >= p) && epoch < cfg.epochs {
            history.stopped_early = true;
            break;
        }
    }
    if let Some((_, params)) = best {
        *model.params_mut() = params;
    }
    Ok(history)
}

/// Score of one raw model output: the regression value, or the argmax
/// class mapped onto `[-3, 3]`.
pub fn output_score(task: Task, output: &Tensor) -> f64 {
    match task {
        Task::Regression => output.item(),
        Task::Classification { classes } => {
            let row = output.row(0);
            let best = (0..row.len())
                .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)))
                .expect("at least two classes");
            class_to_score(best, classes)
        }
    }
}

/// Target score of a label under `task`.
pub fn target_score(task: Task, label: Label) -> f64 {
    match task {
        Task::Classification { classes } => label.score(classes),
        Task::Regression => label.score(7),
    }
}

/// Evaluation-mode predicted and target scores.
pub fn predict_scores(model: &Model, samples: &[MultimodalSample]) -> Result<(Vec<f64>, Vec<f64>)> {
    let task = model.task();
    let mut preds = Vec::with_capacity(samples.len());
    let mut targets = Vec::with_capacity(samples.len());
    for s in samples {
        preds.push(output_score(task, &model.infer(&s.inputs())?));
        targets.push(target_score(task, s.label));
    }
    Ok((preds, targets))
}

/// Metrics of `model` on `samples` with dropout disabled.
pub fn evaluate(model: &Model, samples: &[MultimodalSample]) -> Result<MetricsReport> {
    if samples.is_empty() {
        return Err(Error::Contract("evaluation set is empty".into()));
    }
    let (p, t) = predict_scores(model, samples)?;
    compute_metrics(&p, &t)
}

/// Fraction of samples whose predicted class equals the label.
pub fn class_accuracy(model: &Model, samples: &[MultimodalSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Contract("evaluation set is empty".into()));
    }
    let mut hits = 0;
    for s in samples {
        let out = model.infer(&s.inputs())?;
        let row = out.row(0);
        let best = (0..row.len())
            .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)))
            .expect("non-empty output");
        if s.label == Label::Class(best) {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}
