//! Central-difference verification of tape gradients.

use super::dense::Tensor;
use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// Outcome of a finite-difference comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index of the worst coordinate.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub coordinates: usize,
}

impl GradCheckReport {
    fn empty() -> Self {
        GradCheckReport {
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
            coordinates: 0,
        }
    }

    /// Keeps whichever of the two reports has the larger error.
    pub fn merge(self, other: GradCheckReport) -> GradCheckReport {
        let coordinates = self.coordinates + other.coordinates;
        let mut worst = if other.max_rel_error > self.max_rel_error {
            other
        } else {
            self
        };
        worst.coordinates = coordinates;
        worst
    }
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Compares the tape gradient of a scalar function of one tensor against
/// central differences with step `eps` on every coordinate.
///
/// `f` must build its graph on the given tape from the supplied input node
/// and return a scalar node. It must be deterministic.
pub fn finite_diff_check<F>(mut f: F, x: &Tensor, eps: f64) -> Result<GradCheckReport>
where
    F: FnMut(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let input = tape.leaf(x.clone());
    let root = f(&mut tape, input)?;
    let analytic = tape.backward(root)?.wrt(&tape, input);

    let mut eval = |point: Tensor| -> Result<f64> {
        let mut tape = Tape::new();
        let input = tape.leaf(point);
        let root = f(&mut tape, input)?;
        let v = tape.value(root);
        if v.shape() != [1, 1] {
            return Err(Error::Contract("checked function must be scalar".into()));
        }
        Ok(v.item())
    };

    let mut report = GradCheckReport::empty();
    report.coordinates = x.len();
    for i in 0..x.len() {
        let mut plus = x.clone();
        plus.data_mut()[i] += eps;
        let mut minus = x.clone();
        minus.data_mut()[i] -= eps;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * eps);
        let a = analytic.data()[i];
        let err = relative_error(a, numeric);
        if i == 0 || err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = i;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    Ok(report)
}
