//! Per-intent confusion counts, precision/recall/F1 with macro averages,
//! report rendering, and k-fold cross-validation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{
    featurize, train_one_vs_rest, ClassifierError, LinearMultilabelModel, TrainConfig,
};
use crate::corpus::LabelRegistry;
use crate::dataset::{Dataset, FoldAssignment};
use crate::hash::sha256_json;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions and gold have different lengths ({predictions} vs {gold})")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("gold vector {index} has length {found}, registry has {expected} labels")]
    ShapeMismatch {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("predicted label '{label}' is not in the registry")]
    UnknownPredictedLabel { label: String },
    #[error("cannot macro-average an empty label list")]
    EmptyLabelList,
    #[error("fold {fold} has no {side} examples")]
    EmptyFold { fold: usize, side: &'static str },
    #[error("unknown report format '{format}' (expected tsv or json)")]
    UnknownFormat { format: String },
    #[error("malformed report: {0}")]
    MalformedReport(String),
    #[error(transparent)]
    Train(#[from] ClassifierError),
}

/// Confusion counts for one label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    #[serde(rename = "tp")]
    pub true_pos: u64,
    #[serde(rename = "fp")]
    pub false_pos: u64,
    #[serde(rename = "fn")]
    pub false_neg: u64,
    #[serde(rename = "tn")]
    pub true_neg: u64,
}

/// Confusion counts for every registry label over one evaluation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub per_label: Vec<LabelCounts>,
    pub n_examples: u64,
}

/// Tallies per-label confusion counts from predicted label sets against
/// gold label vectors. For each label: tp counts examples where both agree
/// positive, fp predicted-only, fn gold-only, tn the remainder.
pub fn count_confusions(
    predictions: &[BTreeSet<String>],
    gold: &[Vec<bool>],
    registry: &LabelRegistry,
) -> Result<ConfusionCounts, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    let n_labels = registry.len();
    let mut per_label = vec![LabelCounts::default(); n_labels];
    for (index, (pred, gold_vec)) in predictions.iter().zip(gold).enumerate() {
        if gold_vec.len() != n_labels {
            return Err(EvalError::ShapeMismatch {
                index,
                found: gold_vec.len(),
                expected: n_labels,
            });
        }
        for label in pred {
            if registry.index_of(label).is_none() {
                return Err(EvalError::UnknownPredictedLabel {
                    label: label.clone(),
                });
            }
        }
        for (i, def) in registry.labels.iter().enumerate() {
            let predicted = pred.contains(&def.id);
            let actual = gold_vec[i];
            let counts = &mut per_label[i];
            match (predicted, actual) {
                (true, true) => counts.true_pos += 1,
                (true, false) => counts.false_pos += 1,
                (false, true) => counts.false_neg += 1,
                (false, false) => counts.true_neg += 1,
            }
        }
    }
    Ok(ConfusionCounts {
        per_label,
        n_examples: predictions.len() as u64,
    })
}

/// Precision, recall, and F1 for one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// precision = TP/(TP+FP), recall = TP/(TP+FN), F1 their harmonic mean;
/// any 0/0 resolves to 0.
pub fn precision_recall_f1(label: &str, counts: &LabelCounts) -> LabelMetrics {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(counts.true_pos, counts.true_pos + counts.false_pos);
    let recall = ratio(counts.true_pos, counts.true_pos + counts.false_neg);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    LabelMetrics {
        label: label.to_string(),
        precision,
        recall,
        f1,
    }
}

/// Unweighted macro averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn macro_average(per_label: &[LabelMetrics]) -> Result<MacroMetrics, EvalError> {
    if per_label.is_empty() {
        return Err(EvalError::EmptyLabelList);
    }
    let n = per_label.len() as f64;
    Ok(MacroMetrics {
        precision: per_label.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: per_label.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: per_label.iter().map(|m| m.f1).sum::<f64>() / n,
    })
}

/// Full evaluation result: per-label metrics in registry order, macro
/// averages, raw counts, and hashes of the evaluated artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_label: Vec<LabelMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub counts: ConfusionCounts,
    pub dataset_hash: String,
    pub model_hash: String,
}

/// Counts confusions and assembles the report in registry order.
pub fn build_report(
    predictions: &[BTreeSet<String>],
    gold: &[Vec<bool>],
    registry: &LabelRegistry,
    dataset_hash: &str,
    model_hash: &str,
) -> Result<MetricsReport, EvalError> {
    let counts = count_confusions(predictions, gold, registry)?;
    let per_label: Vec<LabelMetrics> = registry
        .labels
        .iter()
        .zip(&counts.per_label)
        .map(|(def, c)| precision_recall_f1(&def.id, c))
        .collect();
    let macros = macro_average(&per_label)?;
    Ok(MetricsReport {
        per_label,
        macro_precision: macros.precision,
        macro_recall: macros.recall,
        macro_f1: macros.f1,
        counts,
        dataset_hash: dataset_hash.to_string(),
        model_hash: model_hash.to_string(),
    })
}

/// Evaluates a trained model over a dataset's sentences.
pub fn evaluate_model(
    model: &LinearMultilabelModel,
    dataset: &Dataset,
    dataset_hash: &str,
) -> Result<MetricsReport, EvalError> {
    let predictions: Vec<BTreeSet<String>> = dataset
        .examples
        .iter()
        .map(|e| model.predict_labels(&e.sentence.text))
        .collect();
    let gold: Vec<Vec<bool>> = dataset
        .examples
        .iter()
        .map(|e| e.label_vector.clone())
        .collect();
    let model_hash = sha256_json(model).expect("model serializes");
    build_report(&predictions, &gold, &dataset.registry, dataset_hash, &model_hash)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
}

impl ReportFormat {
    pub fn parse(format: &str) -> Result<Self, EvalError> {
        match format.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Self::Tsv),
            "json" => Ok(Self::Json),
            other => Err(EvalError::UnknownFormat {
                format: other.to_string(),
            }),
        }
    }
}

/// Renders a report. TSV carries Intent/Precision/Recall/F1 rows in
/// registry order with the macro row last, values rounded to 2 decimals,
/// and `#` footer lines stating the formulas. JSON is the full-precision
/// serialization including confusion counts.
pub fn render_report(report: &MetricsReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(report).expect("report serializes");
            text.push('\n');
            text
        }
        ReportFormat::Tsv => {
            let mut out = String::from("Intent\tPrecision\tRecall\tF1\n");
            for m in &report.per_label {
                out.push_str(&format!(
                    "{}\t{:.2}\t{:.2}\t{:.2}\n",
                    m.label, m.precision, m.recall, m.f1
                ));
            }
            out.push_str(&format!(
                "Macro\t{:.2}\t{:.2}\t{:.2}\n",
                report.macro_precision, report.macro_recall, report.macro_f1
            ));
            out.push_str("# precision = TP / (TP + FP); recall = TP / (TP + FN)\n");
            out.push_str("# F1 = 2 * precision * recall / (precision + recall); 0/0 -> 0\n");
            out.push_str("# macro row = unweighted mean over intents\n");
            out
        }
    }
}

/// Parses a JSON report back; TSV is write-only.
pub fn parse_json_report(text: &str) -> Result<MetricsReport, EvalError> {
    serde_json::from_str(text).map_err(|e| EvalError::MalformedReport(e.to_string()))
}

/// Mean and population standard deviation of one metric across folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MeanStd {
        mean,
        std: var.sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub macro_precision: MeanStd,
    pub macro_recall: MeanStd,
    pub macro_f1: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_reports: Vec<MetricsReport>,
    pub summary: CvSummary,
}

/// For each fold i: trains on every other fold and evaluates on fold i,
/// without early stopping. Reports come back in fold-index order with a
/// mean/std summary across folds.
pub fn cross_validate(
    dataset: &Dataset,
    folds: &FoldAssignment,
    config: &TrainConfig,
) -> Result<CvResult, EvalError> {
    let dataset_hash = sha256_json(dataset).expect("dataset serializes");
    let mut fold_reports = Vec::with_capacity(folds.k);
    for fold in 0..folds.k {
        let eval_docs = folds.fold_docs(fold);
        let train_docs: BTreeSet<String> = folds
            .fold_of_doc
            .iter()
            .filter(|(_, &f)| f != fold)
            .map(|(d, _)| d.clone())
            .collect();
        let train_ds = dataset.subset(&train_docs);
        let eval_ds = dataset.subset(&eval_docs);
        if train_ds.examples.is_empty() {
            return Err(EvalError::EmptyFold { fold, side: "training" });
        }
        if eval_ds.examples.is_empty() {
            return Err(EvalError::EmptyFold { fold, side: "evaluation" });
        }
        let outcome = train_one_vs_rest(&train_ds, None, config)?;
        let model = outcome.model;
        let predictions: Vec<BTreeSet<String>> = eval_ds
            .examples
            .iter()
            .map(|e| {
                let features = featurize(&e.sentence.text, &model.vocabulary);
                model.labels_from_probs(&model.predict_probs_from_features(&features))
            })
            .collect();
        let gold: Vec<Vec<bool>> = eval_ds
            .examples
            .iter()
            .map(|e| e.label_vector.clone())
            .collect();
        let model_hash = sha256_json(&model).expect("model serializes");
        fold_reports.push(build_report(
            &predictions,
            &gold,
            &dataset.registry,
            &dataset_hash,
            &model_hash,
        )?);
    }
    let summary = CvSummary {
        macro_precision: mean_std(
            &fold_reports.iter().map(|r| r.macro_precision).collect::<Vec<_>>(),
        ),
        macro_recall: mean_std(&fold_reports.iter().map(|r| r.macro_recall).collect::<Vec<_>>()),
        macro_f1: mean_std(&fold_reports.iter().map(|r| r.macro_f1).collect::<Vec<_>>()),
    };
    Ok(CvResult {
        fold_reports,
        summary,
    })
}
