//! Feature extraction, per-channel normalization and multinomial logistic
//! regression trained with Adam.

mod features;
mod io;
mod model;
mod train;

pub use features::{FeatureExtractor, FeatureKind, FeatureLayout, FeatureSet, NormStats, SIGMA_FLOOR};
pub use io::{
    export_weight_map, flatten_weights, read_classifier, read_classifier_file, reshape_weights, write_classifier,
    write_classifier_file, write_weight_map_csv, Classifier,
};
pub use model::{adam_step, forward, loss_grad, AdamState, Gradients, Init, LinearModel, ADAM_LEARNING_RATE};
pub use train::{evaluate, train, write_history_csv, Evaluation, HistoryRow, TrainConfig, TrainOutcome};
