//! The MCMulT architecture graph.

pub mod attention;
pub mod config;
pub mod connectivity;
pub mod embed;
pub mod modality;
pub mod model;
pub mod unit;

pub use attention::{crossmodal_attention, AttentionParams, Context};
pub use config::{ModelConfig, Task, Variant};
pub use connectivity::{build_connectivity, ConnectivityGraph, LayerPlan, LayerRole, ScaleRef};
pub use embed::{embed_low_level, positional_encoding, EmbedParams};
pub use modality::{Branch, BranchSet, ModalityKind};
pub use model::{
    count_parameters, BranchState, ForwardOutput, Model, ModalityInput, PredictionTarget, SampleInputs,
};
pub use unit::{
    ct_forward, mact_forward, multiscale_aggregate, multiscale_interaction_set, positionwise_ff, Dropout,
    MactTrace, UnitParams,
};
