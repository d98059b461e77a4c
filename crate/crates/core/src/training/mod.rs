//! Losses, optimizers, the training loop and checkpoints.

pub mod checkpoint;
pub mod loss;
pub mod model;
pub mod optimizer;
pub mod trainer;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, load_lem, load_lstm, save_checkpoint, Checkpoint,
    TrainerTrailer,
};
pub use loss::{argmax, cross_entropy_loss, mse_last_loss, mse_loss, sequence_loss, LossKind, SequenceTarget};
pub use model::{Model, ModelGrads, ModelKind};
pub use optimizer::{clip_global_norm, Optimizer, OptimizerKind};
pub use trainer::{
    evaluate, train, write_metrics_csv, write_summary_json, EpochMetrics, Evaluation, LrDecay, Readout, TrainConfig,
    TrainSummary, Trainer,
};
