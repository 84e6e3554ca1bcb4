//! The linear one-vs-rest model: per-label logistic heads over a shared
//! feature space, with a versioned, checksummed on-disk format.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureVector, Vocabulary};
use super::ClassifierError;
use crate::corpus::LabelRegistry;
use crate::hash::sha256_json;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// One dense weight vector, bias, and decision threshold per registry label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMultilabelModel {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub registry: LabelRegistry,
    pub vocabulary: Vocabulary,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LinearMultilabelModel {
    /// Fresh model with zero weights and the default 0.5 thresholds.
    pub fn new(registry: LabelRegistry, vocabulary: Vocabulary) -> Self {
        let n_labels = registry.len();
        let n_features = vocabulary.n_features();
        Self {
            weights: vec![vec![0.0; n_features]; n_labels],
            biases: vec![0.0; n_labels],
            thresholds: vec![0.5; n_labels],
            registry,
            vocabulary,
        }
    }

    pub fn n_labels(&self) -> usize {
        self.registry.len()
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let n_labels = self.registry.len();
        let n_features = self.vocabulary.n_features();
        if self.weights.len() != n_labels
            || self.biases.len() != n_labels
            || self.thresholds.len() != n_labels
        {
            return Err(ClassifierError::MalformedModel(format!(
                "registry has {n_labels} labels but model stores {} weight vectors, {} biases, {} thresholds",
                self.weights.len(),
                self.biases.len(),
                self.thresholds.len()
            )));
        }
        for (i, w) in self.weights.iter().enumerate() {
            if w.len() != n_features {
                return Err(ClassifierError::MalformedModel(format!(
                    "label {i}: weight vector length {} != {n_features} features",
                    w.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(ClassifierError::MalformedModel(format!(
                    "label {i}: non-finite weight"
                )));
            }
        }
        if self.biases.iter().any(|b| !b.is_finite()) {
            return Err(ClassifierError::MalformedModel("non-finite bias".to_string()));
        }
        self.vocabulary.validate()?;
        self.registry
            .validate()
            .map_err(|e| ClassifierError::MalformedModel(e.to_string()))?;
        Ok(())
    }

    /// Per-label probabilities for an already-featurized sentence.
    pub fn predict_probs_from_features(&self, features: &FeatureVector) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| sigmoid(features.dot(w) + b))
            .collect()
    }

    /// Per-label probabilities σ(W_l·x + b_l) for a sentence.
    pub fn predict_probs(&self, text: &str) -> Vec<f64> {
        self.predict_probs_from_features(&featurize(text, &self.vocabulary))
    }

    /// Label ids whose probability reaches their threshold. May be empty,
    /// may hold several labels.
    pub fn predict_labels(&self, text: &str) -> BTreeSet<String> {
        self.labels_from_probs(&self.predict_probs(text))
    }

    /// Applies the per-label thresholds to a probability vector.
    pub fn labels_from_probs(&self, probs: &[f64]) -> BTreeSet<String> {
        probs
            .iter()
            .zip(&self.registry.labels)
            .zip(&self.thresholds)
            .filter(|((p, _), t)| *p >= *t)
            .map(|((_, def), _)| def.id.clone())
            .collect()
    }
}

/// The checksummed portion of the on-disk format. Field order is fixed:
/// the checksum is the SHA-256 of this struct's canonical JSON.
#[derive(Serialize, Deserialize)]
struct ModelPayload {
    format_version: u32,
    registry: LabelRegistry,
    vocabulary: Vocabulary,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    thresholds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    registry: LabelRegistry,
    vocabulary: Vocabulary,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    thresholds: Vec<f64>,
    checksum: String,
}

pub fn save_model(model: &LinearMultilabelModel, path: &Path) -> Result<(), ClassifierError> {
    model.validate()?;
    let payload = ModelPayload {
        format_version: MODEL_FORMAT_VERSION,
        registry: model.registry.clone(),
        vocabulary: model.vocabulary.clone(),
        weights: model.weights.clone(),
        biases: model.biases.clone(),
        thresholds: model.thresholds.clone(),
    };
    let checksum = sha256_json(&payload).expect("model payload serializes");
    let file = ModelFile {
        format_version: payload.format_version,
        registry: payload.registry,
        vocabulary: payload.vocabulary,
        weights: payload.weights,
        biases: payload.biases,
        thresholds: payload.thresholds,
        checksum,
    };
    let mut bytes = serde_json::to_vec(&file).expect("model serializes");
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|source| ClassifierError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<LinearMultilabelModel, ClassifierError> {
    let bytes = fs::read(path).map_err(|source| ClassifierError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| ClassifierError::MalformedModel(e.to_string()))?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| ClassifierError::MalformedModel("missing format_version".to_string()))?;
    if found != u64::from(MODEL_FORMAT_VERSION) {
        return Err(ClassifierError::VersionMismatch {
            found: found.try_into().unwrap_or(u32::MAX),
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| ClassifierError::MalformedModel(e.to_string()))?;
    let payload = ModelPayload {
        format_version: file.format_version,
        registry: file.registry,
        vocabulary: file.vocabulary,
        weights: file.weights,
        biases: file.biases,
        thresholds: file.thresholds,
    };
    let expected = sha256_json(&payload).expect("model payload serializes");
    if expected != file.checksum {
        return Err(ClassifierError::ChecksumMismatch);
    }
    let model = LinearMultilabelModel {
        registry: payload.registry,
        vocabulary: payload.vocabulary,
        weights: payload.weights,
        biases: payload.biases,
        thresholds: payload.thresholds,
    };
    model.validate()?;
    Ok(model)
}
