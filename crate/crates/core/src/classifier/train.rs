//! Mini-batch gradient-descent training for the one-vs-rest model.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{build_vocabulary, featurize, FeatureVector};
use super::model::{sigmoid, LinearMultilabelModel};
use super::ClassifierError;
use crate::dataset::Dataset;
use crate::eval::{count_confusions, macro_average, precision_recall_f1};

/// Training hyperparameters. A JSON config file may set any subset; the
/// rest keep these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "TrainConfig::default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "TrainConfig::default_l2_lambda")]
    pub l2_lambda: f64,
    #[serde(default = "TrainConfig::default_epochs")]
    pub epochs: usize,
    #[serde(default = "TrainConfig::default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "TrainConfig::default_early_stop_patience")]
    pub early_stop_patience: usize,
}

impl TrainConfig {
    fn default_learning_rate() -> f64 {
        0.1
    }

    fn default_l2_lambda() -> f64 {
        1e-4
    }

    fn default_epochs() -> usize {
        50
    }

    fn default_batch_size() -> usize {
        32
    }

    fn default_early_stop_patience() -> usize {
        5
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(ClassifierError::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.l2_lambda < 0.0 || !self.l2_lambda.is_finite() {
            return Err(ClassifierError::InvalidConfig(format!(
                "l2_lambda must be non-negative, got {}",
                self.l2_lambda
            )));
        }
        if self.epochs == 0 {
            return Err(ClassifierError::InvalidConfig(
                "epochs must be at least 1".to_string(),
            ));
        }
        if self.batch_size == 0 {
            return Err(ClassifierError::InvalidConfig(
                "batch_size must be at least 1".to_string(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let bytes = fs::read(path).map_err(|source| ClassifierError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: TrainConfig = serde_json::from_slice(&bytes)
            .map_err(|e| ClassifierError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("config serializes");
        bytes.push(b'\n');
        fs::write(path, bytes).map_err(|source| ClassifierError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: Self::default_learning_rate(),
            l2_lambda: Self::default_l2_lambda(),
            epochs: Self::default_epochs(),
            batch_size: Self::default_batch_size(),
            seed: 0,
            early_stop_patience: Self::default_early_stop_patience(),
        }
    }
}

/// Gradient with the same shape as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

/// One training example as seen by the loss: features plus the gold label
/// vector.
pub type BatchExample<'a> = (&'a FeatureVector, &'a [bool]);

/// Binary cross-entropy averaged over batch and labels, plus
/// (l2_lambda/2)·Σ‖W_l‖², with its exact analytic gradient.
///
/// The per-example term is computed in the logit form
/// max(z,0) − z·y + ln(1+e^{−|z|}), which stays finite for any finite z.
pub fn loss_and_gradient(
    model: &LinearMultilabelModel,
    batch: &[BatchExample],
    l2_lambda: f64,
) -> Result<(f64, Gradient), ClassifierError> {
    if batch.is_empty() {
        return Err(ClassifierError::EmptyBatch);
    }
    let n_labels = model.n_labels();
    let n_features = model.vocabulary.n_features();
    for (index, (_, y)) in batch.iter().enumerate() {
        if y.len() != n_labels {
            return Err(ClassifierError::BatchShapeMismatch {
                index,
                found: y.len(),
                expected: n_labels,
            });
        }
    }
    let scale = 1.0 / (batch.len() * n_labels) as f64;
    let mut gradient = Gradient {
        weights: vec![vec![0.0; n_features]; n_labels],
        biases: vec![0.0; n_labels],
    };
    let mut loss = 0.0;
    for l in 0..n_labels {
        let w = &model.weights[l];
        let b = model.biases[l];
        let mut label_loss = 0.0;
        for (x, y) in batch {
            let z = x.dot(w) + b;
            let target = f64::from(u8::from(y[l]));
            label_loss += z.max(0.0) - z * target + (-z.abs()).exp().ln_1p();
            let residual = sigmoid(z) - target;
            for &(i, xv) in x.entries() {
                gradient.weights[l][i] += residual * xv;
            }
            gradient.biases[l] += residual;
        }
        let penalty = 0.5 * l2_lambda * w.iter().map(|v| v * v).sum::<f64>();
        if !label_loss.is_finite() || !penalty.is_finite() {
            return Err(ClassifierError::NonFiniteLoss { label_index: l });
        }
        loss += label_loss * scale + penalty;
        for (g, wv) in gradient.weights[l].iter_mut().zip(w) {
            *g = *g * scale + l2_lambda * wv;
        }
        gradient.biases[l] *= scale;
    }
    Ok((loss, gradient))
}

/// Summary of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Labels without both a positive and a negative training example;
    /// these were frozen at their prevalence instead of trained.
    pub degenerate_labels: Vec<String>,
    pub epochs_run: usize,
    pub best_epoch: Option<usize>,
    pub best_val_macro_f1: Option<f64>,
    pub final_train_loss: f64,
}

pub struct TrainOutcome {
    pub model: LinearMultilabelModel,
    pub report: TrainReport,
}

/// Trains one logistic head per registry label with seeded mini-batch
/// gradient descent. With a validation set, training stops once validation
/// macro-F1 has not strictly improved for `early_stop_patience` epochs and
/// the best-epoch parameters are restored.
///
/// Labels with no positive (or no negative) training example cannot be fit;
/// they keep zero weights and a saturated bias so their probability is
/// constantly their training prevalence (0 or 1), and they are reported.
pub fn train_one_vs_rest(
    train: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<TrainOutcome, ClassifierError> {
    config.validate()?;
    if train.examples.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if let Some(val) = validation {
        if val.registry != train.registry {
            return Err(ClassifierError::RegistryMismatch);
        }
    }
    let vocabulary = build_vocabulary(train, 1, 2)?;
    let features: Vec<FeatureVector> = train
        .examples
        .iter()
        .map(|e| featurize(&e.sentence.text, &vocabulary))
        .collect();
    let n = train.examples.len();
    let n_labels = train.registry.len();

    let mut positives = vec![0usize; n_labels];
    for example in &train.examples {
        for (l, &on) in example.label_vector.iter().enumerate() {
            if on {
                positives[l] += 1;
            }
        }
    }
    let degenerate: Vec<bool> = positives.iter().map(|&p| p == 0 || p == n).collect();
    if degenerate.iter().all(|&d| d) {
        return Err(ClassifierError::AllLabelsDegenerate);
    }

    let mut model = LinearMultilabelModel::new(train.registry.clone(), vocabulary);
    for l in 0..n_labels {
        if degenerate[l] {
            model.biases[l] = if positives[l] == 0 { -1000.0 } else { 1000.0 };
        }
    }

    let val_features: Option<Vec<FeatureVector>> = validation.map(|val| {
        val.examples
            .iter()
            .map(|e| featurize(&e.sentence.text, &model.vocabulary))
            .collect()
    });

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(f64, Vec<Vec<f64>>, Vec<f64>, usize)> = None;
    let mut stall = 0usize;
    let mut epochs_run = 0usize;

    for epoch in 0..config.epochs {
        epochs_run = epoch + 1;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<BatchExample> = chunk
                .iter()
                .map(|&i| (&features[i], train.examples[i].label_vector.as_slice()))
                .collect();
            let (_, gradient) = loss_and_gradient(&model, &batch, config.l2_lambda)?;
            for l in 0..n_labels {
                if degenerate[l] {
                    continue;
                }
                for (w, g) in model.weights[l].iter_mut().zip(&gradient.weights[l]) {
                    *w -= config.learning_rate * g;
                }
                model.biases[l] -= config.learning_rate * gradient.biases[l];
            }
        }

        if let (Some(val), Some(val_features)) = (validation, &val_features) {
            let f1 = validation_macro_f1(&model, val, val_features)?;
            let improved = best.as_ref().is_none_or(|(b, ..)| f1 > *b);
            if improved {
                best = Some((f1, model.weights.clone(), model.biases.clone(), epoch));
                stall = 0;
            } else {
                stall += 1;
                if stall >= config.early_stop_patience {
                    break;
                }
            }
        }
    }

    let mut best_epoch = None;
    let mut best_val_macro_f1 = None;
    if let Some((f1, weights, biases, epoch)) = best {
        model.weights = weights;
        model.biases = biases;
        best_epoch = Some(epoch);
        best_val_macro_f1 = Some(f1);
    }

    let full_batch: Vec<BatchExample> = features
        .iter()
        .zip(&train.examples)
        .map(|(f, e)| (f, e.label_vector.as_slice()))
        .collect();
    let (final_train_loss, _) = loss_and_gradient(&model, &full_batch, config.l2_lambda)?;

    let degenerate_labels = train
        .registry
        .labels
        .iter()
        .zip(&degenerate)
        .filter(|(_, &d)| d)
        .map(|(def, _)| def.id.clone())
        .collect();
    Ok(TrainOutcome {
        model,
        report: TrainReport {
            degenerate_labels,
            epochs_run,
            best_epoch,
            best_val_macro_f1,
            final_train_loss,
        },
    })
}

fn validation_macro_f1(
    model: &LinearMultilabelModel,
    val: &Dataset,
    val_features: &[FeatureVector],
) -> Result<f64, ClassifierError> {
    let predictions: Vec<_> = val_features
        .iter()
        .map(|f| model.labels_from_probs(&model.predict_probs_from_features(f)))
        .collect();
    let gold: Vec<Vec<bool>> = val.examples.iter().map(|e| e.label_vector.clone()).collect();
    let counts = count_confusions(&predictions, &gold, &model.registry)
        .expect("aligned by construction");
    let per_label: Vec<_> = model
        .registry
        .labels
        .iter()
        .zip(&counts.per_label)
        .map(|(def, c)| precision_recall_f1(&def.id, c))
        .collect();
    let macros = macro_average(&per_label).expect("registry is non-empty");
    Ok(macros.f1)
}
