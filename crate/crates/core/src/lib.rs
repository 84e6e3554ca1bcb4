//! Detection of follow-up intents in clinical free text.
//!
//! The crate covers the full pipeline: annotated-corpus handling, sentence
//! segmentation, dataset construction with document-level splits, a
//! multilabel linear classifier over TF-IDF n-gram features, evaluation,
//! synthetic corpus generation, and reconciliation of detected intents
//! against an orders ledger.

pub mod classifier;
pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod hash;
pub mod reconcile;
pub mod segment;
pub mod synth;
