//! Multi-scale cooperative multimodal transformers (MCMulT) for unaligned
//! multimodal sequence classification.
//!
//! The crate is layered bottom-up:
//!
//! - [`tensor`]: dense `f64` matrices, a define-by-run gradient tape, Adam,
//!   global-norm clipping and a central-difference gradient checker.
//! - [`arch`]: low-level embeddings, crossmodal attention, the MACT and CT
//!   units, per-variant connectivity, the cooperative scheduler and the
//!   prediction head.
//! - [`data`]: a planted-signal synthetic generator, a CSV dataset format,
//!   padding/masking and splitting.
//! - [`train`]: losses, the training loop, sentiment metrics, the ablation
//!   runner and attention-map export.
//! - [`cli`]: config resolution and the subcommands behind the `mcmult`
//!   binary.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod arch;
pub mod cli;
pub mod data;
mod error;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
