//! One-vs-rest multilabel sentence classifier.
//!
//! The contract-bearing implementation is a sparse linear model over
//! TF-IDF bag-of-n-grams features with one logistic head per intent label.
//! [`EncoderBackend`] is the substitution seam for denser text encoders:
//! anything that maps a sentence to a fixed-dimension vector can stand in
//! for the sparse featurizer.

mod encoder;
mod features;
mod model;
mod train;

pub use encoder::{EncoderBackend, TfidfEncoder};
pub use features::{build_vocabulary, featurize, tokenize, FeatureVector, Vocabulary};
pub use model::{load_model, save_model, LinearMultilabelModel, MODEL_FORMAT_VERSION};
pub use train::{loss_and_gradient, train_one_vs_rest, Gradient, TrainConfig, TrainOutcome, TrainReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("no n-gram survived vocabulary construction; training text is empty")]
    EmptyVocabulary,
    #[error("max_ngram must be at least 1")]
    ZeroNgramOrder,
    #[error("invalid feature vector: {0}")]
    InvalidFeatureVector(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("batch example {index}: label vector has length {found}, model has {expected} labels")]
    BatchShapeMismatch {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("non-finite loss for label index {label_index}")]
    NonFiniteLoss { label_index: usize },
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("train and validation datasets use different registries")]
    RegistryMismatch,
    #[error("every label is degenerate (no label has both positive and negative examples)")]
    AllLabelsDegenerate,
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    MalformedModel(String),
    #[error("model format version {found} is not supported (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("model checksum mismatch: file is corrupted or was edited")]
    ChecksumMismatch,
}
