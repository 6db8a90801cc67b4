//! Dense numerics with reverse-mode differentiation, the optimizer and the
//! finite-difference verifier.

mod dense;
pub mod gradcheck;
pub mod optim;
pub mod params;
mod tape;

pub use dense::Tensor;
pub use gradcheck::{finite_diff_check, relative_error, GradCheckReport};
pub use optim::{clip_global_norm, global_norm, AdamState};
pub use params::{Init, ParamId, ParameterStore};
pub use tape::{Gradients, Tape, Var};
