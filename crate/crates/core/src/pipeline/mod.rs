//! Preprocessing, two-level training, dispatch and reporting.

mod corpus;
mod frontend;
mod report;
mod two_level;

pub use corpus::{
    load_dataset, preprocess_corpus, FeatureManifest, FeatureTable, ManifestEntry, PrepFailure, PrepOptions,
    AUDIO_DIR, FEATURE_DIR, MANIFEST_FILE, META_PATH, SPECTROGRAM_DIR,
};
pub use frontend::Frontend;
pub use report::{
    evaluate_end_to_end, evaluate_isolated, evaluate_model_set, EndToEnd, ExperimentReport, LevelReport, Timings,
};
pub use two_level::{
    level_classes, train_level, train_two_level, ModelSet, PipelineConfig, Prediction, ScaledHead, TrainedLevel,
    TwoLevelModel,
};
