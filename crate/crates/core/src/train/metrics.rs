//! Sentiment metrics over predicted and target scores.
//!
//! Acc7 clamps to `[-3, 3]` and rounds half away from zero. Acc2 and F1
//! treat a score `>= 0` as positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc7: f64,
    pub acc2: f64,
    pub f1: f64,
    pub mae: f64,
    pub corr: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "acc7,acc2,f1,mae,corr";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.acc7, self.acc2, self.f1, self.mae, self.corr)
    }
}

/// Binary confusion counts with `>= 0` as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_scores(predictions: &[f64], targets: &[f64]) -> Self {
        let mut c = Confusion::default();
        for (&p, &t) in predictions.iter().zip(targets) {
            match (is_positive(p), is_positive(t)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// F1 of the positive class; 1 when there are neither predicted nor
    /// actual positives.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

pub fn is_positive(score: f64) -> bool {
    score >= 0.0
}

/// Integer sentiment class of a score.
pub fn seven_class(score: f64) -> i64 {
    score.clamp(-3.0, 3.0).round() as i64
}

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn compute_metrics(predictions: &[f64], targets: &[f64]) -> Result<MetricsReport> {
    if predictions.is_empty() {
        return Err(Error::Contract("cannot compute metrics on an empty set".into()));
    }
    if predictions.len() != targets.len() {
        return Err(Error::dim("compute_metrics", &[predictions.len()], &[targets.len()]));
    }
    let n = predictions.len() as f64;
    let acc7 = predictions
        .iter()
        .zip(targets)
        .filter(|(p, t)| seven_class(**p) == seven_class(**t))
        .count() as f64
        / n;
    let confusion = Confusion::from_scores(predictions, targets);
    let mae = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / n;
    Ok(MetricsReport {
        acc7,
        acc2: confusion.accuracy(),
        f1: confusion.f1(),
        mae,
        corr: pearson(predictions, targets),
    })
}
