//! Multimodal samples, the planted-signal generator, the directory format,
//! batching and splitting.

pub mod batch;
pub mod io;
pub mod sample;
pub mod split;
pub mod synthetic;

pub use batch::{batch_and_pad, Batch, PaddedModality};
pub use io::{load_dataset, read_manifest, save_dataset, Manifest};
pub use sample::{class_to_score, Label, LabelKind, ModalitySequence, MultimodalSample};
pub use split::{split, split_sizes, Split};
pub use synthetic::{generate_synthetic, generate_with_truth, PlantedTruth, SyntheticData, SyntheticSpec};
