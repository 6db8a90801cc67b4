use super::loss::LossKind;
use super::trainer::sample_loss;
use crate::arch::{Context, Model, SampleInputs};
use crate::data::Label;
use crate::error::Result;
use crate::tensor::{relative_error, GradCheckReport, ParamId, Tape};

/// Smallest step tried when shrinking across a ReLU kink.
const MIN_STEP: f64 = 1e-8;

/// Evaluation-mode loss of one sample and its ReLU signature.
fn loss_value(model: &Model, inputs: &SampleInputs, label: Label, loss: LossKind) -> Result<(f64, Vec<bool>)> {
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, inputs, &mut Context::eval())?.output;
    let l = sample_loss(&mut tape, loss, out, label)?;
    Ok((tape.value(l).item(), tape.relu_signature()))
}

fn empty_report() -> GradCheckReport {
    GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        coordinates: 0,
    }
}

/// Result of a model-wide gradient check.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGradCheck {
    /// Coordinates whose `±eps` evaluations share one ReLU signature.
    pub smooth: GradCheckReport,
    pub smooth_worst: String,
    /// Coordinates whose `±eps` evaluations straddle a ReLU kink, re-checked
    /// at the largest step `eps / 10^k` that stays on one linear piece.
    pub kinked: GradCheckReport,
    pub kinked_worst: String,
    /// Kinked coordinates that stayed straddled down to the smallest step.
    pub unresolved: usize,
}

impl ModelGradCheck {
    pub fn max_rel_error(&self) -> f64 {
        self.smooth.max_rel_error.max(self.kinked.max_rel_error)
    }

    pub fn coordinates(&self) -> usize {
        self.smooth.coordinates + self.kinked.coordinates
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.unresolved == 0 && self.max_rel_error() < tolerance
    }
}

fn record(report: &mut GradCheckReport, worst: &mut String, name: &str, i: usize, a: f64, n: f64) {
    let err = relative_error(a, n);
    report.coordinates += 1;
    if report.coordinates == 1 || err > report.max_rel_error {
        *report = GradCheckReport {
            max_rel_error: err,
            worst_index: i,
            analytic: a,
            numeric: n,
            coordinates: report.coordinates,
        };
        *worst = name.to_string();
    }
}

/// Compares the backpropagated gradient of the sample loss with respect to
/// every parameter scalar against central differences with step `eps`.
///
/// Dropout is disabled so the loss is a deterministic function of the
/// parameters. Parameter values are restored before returning.
pub fn check_model_gradients(
    model: &mut Model,
    inputs: &SampleInputs,
    label: Label,
    loss: LossKind,
    eps: f64,
) -> Result<ModelGradCheck> {
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, inputs, &mut Context::eval())?.output;
    let root = sample_loss(&mut tape, loss, out, label)?;
    let grads = tape.backward(root)?;
    let analytic = model.params().collect_grads(&tape, &grads);

    let mut check = ModelGradCheck {
        smooth: empty_report(),
        smooth_worst: String::new(),
        kinked: empty_report(),
        kinked_worst: String::new(),
        unresolved: 0,
    };
    let ids: Vec<ParamId> = model.params().ids().collect();
    for (id, grad) in ids.into_iter().zip(&analytic) {
        let name = model.params().name(id).to_string();
        for i in 0..grad.len() {
            let original = model.params().get(id).data()[i];
            let central = |model: &mut Model, h: f64| -> Result<(f64, bool)> {
                model.params_mut().get_mut(id).data_mut()[i] = original + h;
                let plus = loss_value(model, inputs, label, loss);
                model.params_mut().get_mut(id).data_mut()[i] = original - h;
                let minus = loss_value(model, inputs, label, loss);
                model.params_mut().get_mut(id).data_mut()[i] = original;
                let ((lp, sp), (lm, sm)) = (plus?, minus?);
                Ok(((lp - lm) / (2.0 * h), sp == sm))
            };
            let a = grad.data()[i];
            let (numeric, smooth) = central(model, eps)?;
            if smooth {
                record(&mut check.smooth, &mut check.smooth_worst, &name, i, a, numeric);
                continue;
            }
            let mut h = eps / 10.0;
            loop {
                let (numeric, smooth) = central(model, h)?;
                if smooth {
                    record(&mut check.kinked, &mut check.kinked_worst, &name, i, a, numeric);
                    break;
                }
                h /= 10.0;
                if h < MIN_STEP {
                    check.unresolved += 1;
                    break;
                }
            }
        }
    }
    Ok(check)
}
