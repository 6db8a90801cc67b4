//! Losses, the training loop, metrics, ablation runs and attention export.

pub mod ablation;
pub mod export;
pub mod gradcheck;
pub mod loss;
pub mod metrics;
pub mod trainer;

pub use ablation::{ablation_run, arms, AblationAxis, AblationRow, AblationTable, Arm, ArmOutcome};
pub use export::{attention_map, export_attention, AttentionMap, AttentionQuery, ExportedAttention};
pub use gradcheck::{check_model_gradients, ModelGradCheck};
pub use loss::{cross_entropy, l1_regression, LossKind};
pub use metrics::{compute_metrics, pearson, seven_class, Confusion, MetricsReport};
pub use trainer::{
    class_accuracy, evaluate, output_score, predict_scores, target_score, train, EpochRecord, RunHistory,
    TrainConfig,
};
