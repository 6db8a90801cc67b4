use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    L1Regression,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::CrossEntropy => "cross_entropy",
            LossKind::L1Regression => "l1_regression",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "cross_entropy" | "ce" => Ok(LossKind::CrossEntropy),
            "l1_regression" | "l1" => Ok(LossKind::L1Regression),
            _ => Err(Error::Config(format!("unknown loss {s:?}"))),
        }
    }
}

/// `-log softmax(logits)[label]` for `1 x C` logits, `C >= 2`.
pub fn cross_entropy(tape: &mut Tape, logits: Var, label: usize) -> Result<Var> {
    let [rows, classes] = tape.shape(logits);
    if rows != 1 || classes < 2 {
        return Err(Error::Contract(format!(
            "cross entropy needs 1 x C logits with C >= 2, got {rows} x {classes}"
        )));
    }
    tape.cross_entropy(logits, label)
}

/// `|score - target|` for a `1 x 1` score.
pub fn l1_regression(tape: &mut Tape, score: Var, target: f64) -> Result<Var> {
    let shape = tape.shape(score);
    if shape != [1, 1] {
        return Err(Error::dim("l1_regression", &[1, 1], &shape));
    }
    let t = tape.leaf(Tensor::scalar(target));
    let diff = tape.sub(score, t)?;
    Ok(tape.abs(diff))
}
