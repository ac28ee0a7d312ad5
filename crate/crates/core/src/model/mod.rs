//! The dense classification head, its trainer, metrics and model container.

mod container;
mod data;
mod metrics;
mod mlp;
mod train;

pub use container::{
    decode_bundle, encode_bundle, load_model, read_bundle, save_model, write_bundle, ModelBundle, MODEL_MAGIC,
    MODEL_VERSION,
};
pub use data::{LabeledSet, Standardizer};
pub use metrics::{evaluate, Classifier, ConfusionMatrix, Metrics};
pub use mlp::{argmax, init_head, softmax_in_place, DenseLayer, Gradients, HeadConfig, Init, MlpHead, Scalar};
pub use train::{train, EpochRecord, TrainConfig, TrainHistory, TrainedHead};
