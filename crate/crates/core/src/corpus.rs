//! Annotated-corpus data model: documents, standoff span annotations, the
//! intent label registry, corpus statistics, and min-support label filtering.
//!
//! All character offsets in this crate are Unicode scalar-value indices
//! (`char` positions), end-exclusive. Byte offsets are never exposed, so the
//! same corpus file means the same spans in any language runtime.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced by corpus loading, validation, and label filtering.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {detail}")]
    MalformedRecord { line: usize, detail: String },
    #[error("document '{doc_id}': span {start}..{end} out of range (text length {text_len})")]
    SpanOutOfRange {
        doc_id: String,
        start: usize,
        end: usize,
        text_len: usize,
    },
    #[error("document '{doc_id}': empty span {start}..{end} (start must be < end)")]
    EmptySpan {
        doc_id: String,
        start: usize,
        end: usize,
    },
    #[error("duplicate doc_id '{doc_id}' at line {line}")]
    DuplicateDocId { doc_id: String, line: usize },
    #[error("empty doc_id at line {line}")]
    EmptyDocId { line: usize },
    #[error("document '{doc_id}': unknown label '{label}'")]
    UnknownLabel { doc_id: String, label: String },
    #[error("label registry: duplicate label id '{id}'")]
    DuplicateLabelId { id: String },
    #[error("label registry: empty label id")]
    EmptyLabelId,
    #[error("no label reaches min_support {min_support}; training would be impossible")]
    AllLabelsDropped { min_support: u64 },
}

/// One intent annotation: a character span in a document plus a label.
///
/// `start` is inclusive, `end` exclusive, both counted in Unicode scalar
/// values from the beginning of the document text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanAnnotation {
    pub start: usize,
    pub end: usize,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
}

/// A raw clinical note with its standoff intent annotations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    #[serde(default)]
    pub annotations: Vec<SpanAnnotation>,
}

impl Document {
    /// Checks the type invariants: non-empty id, spans within the text,
    /// labels known to `registry`.
    pub fn validate(&self, registry: &LabelRegistry) -> Result<(), CorpusError> {
        if self.doc_id.is_empty() {
            return Err(CorpusError::EmptyDocId { line: 0 });
        }
        let text_len = char_len(&self.text);
        for ann in &self.annotations {
            if ann.start >= ann.end {
                return Err(CorpusError::EmptySpan {
                    doc_id: self.doc_id.clone(),
                    start: ann.start,
                    end: ann.end,
                });
            }
            if ann.end > text_len {
                return Err(CorpusError::SpanOutOfRange {
                    doc_id: self.doc_id.clone(),
                    start: ann.start,
                    end: ann.end,
                    text_len,
                });
            }
            if registry.index_of(&ann.label).is_none() {
                return Err(CorpusError::UnknownLabel {
                    doc_id: self.doc_id.clone(),
                    label: ann.label.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Length of `text` in Unicode scalar values.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Slice `text` by character offsets. Returns `None` when the range is out
/// of bounds or inverted.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut iter = text.char_indices();
    let byte_start = if start == 0 {
        0
    } else {
        iter.nth(start - 1).map(|(i, c)| i + c.len_utf8())?
    };
    let mut remaining = end - start;
    let mut byte_end = byte_start;
    if remaining > 0 {
        for (i, c) in text[byte_start..].char_indices() {
            byte_end = byte_start + i + c.len_utf8();
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        if remaining > 0 {
            return None;
        }
    }
    Some(&text[byte_start..byte_end])
}

/// One entry in the label registry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDef {
    pub id: String,
    pub name: String,
}

/// Ordered set of intent labels. The position of a label in `labels` defines
/// its index in every label vector produced downstream, so the ordering is
/// part of the contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRegistry {
    pub labels: Vec<LabelDef>,
    #[serde(default = "LabelRegistry::default_min_support")]
    pub min_support: u64,
}

impl LabelRegistry {
    pub const DEFAULT_MIN_SUPPORT: u64 = 50;

    fn default_min_support() -> u64 {
        Self::DEFAULT_MIN_SUPPORT
    }

    pub fn new(labels: Vec<LabelDef>, min_support: u64) -> Result<Self, CorpusError> {
        let registry = Self {
            labels,
            min_support,
        };
        registry.validate()?;
        Ok(registry)
    }

    /// The ten bariatric follow-up intents the toolkit ships with. Real
    /// deployments supply their own registry file; this default exists so
    /// the tool is usable out of the box.
    pub fn default_intents() -> Self {
        let defs = [
            ("book_outpatient_appointment", "Book out-patient appointment"),
            ("request_imaging", "Request imaging procedure"),
            ("request_bloods", "Request bloods"),
            ("request_ogd", "Request Oesophago-Gastro-Duodenoscopy"),
            ("add_surgical_waitlist", "Add to surgical waitlist"),
            ("see_same_clinic", "See patient in same clinic"),
            ("discharge", "Discharge"),
            ("refer_dietician", "Refer to dietician"),
            ("refer_mdt", "Refer to multi-disciplinary team meeting"),
            ("see_one_stop_clinic", "See in one-stop clinic"),
        ];
        Self {
            labels: defs
                .iter()
                .map(|(id, name)| LabelDef {
                    id: (*id).to_string(),
                    name: (*name).to_string(),
                })
                .collect(),
            min_support: Self::DEFAULT_MIN_SUPPORT,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = BTreeSet::new();
        for def in &self.labels {
            if def.id.is_empty() {
                return Err(CorpusError::EmptyLabelId);
            }
            if !seen.insert(def.id.as_str()) {
                return Err(CorpusError::DuplicateLabelId {
                    id: def.id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Index of a label id in registry order, if present.
    pub fn index_of(&self, label_id: &str) -> Option<usize> {
        self.labels.iter().position(|d| d.id == label_id)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(|d| d.id.as_str())
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let bytes = fs::read(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let registry: LabelRegistry =
            serde_json::from_slice(&bytes).map_err(|e| CorpusError::MalformedRecord {
                line: e.line(),
                detail: e.to_string(),
            })?;
        registry.validate()?;
        Ok(registry)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("registry serializes");
        bytes.push(b'\n');
        fs::write(path, bytes).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// How `load_corpus` treats annotations whose label is not in the registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownLabels {
    /// First unknown label aborts the load.
    Reject,
    /// Unknown-label annotations are dropped from the documents and counted
    /// in [`CorpusLoad::unknown_labels`].
    Collect,
}

/// Result of loading a corpus file.
#[derive(Debug, Clone)]
pub struct CorpusLoad {
    pub documents: Vec<Document>,
    /// Label -> occurrence count for annotations removed under
    /// [`UnknownLabels::Collect`]. Empty in `Reject` mode.
    pub unknown_labels: BTreeMap<String, u64>,
}

/// Loads a JSON-lines corpus file (one document per line) and validates every
/// record against the registry. Document order is preserved.
pub fn load_corpus(
    path: &Path,
    registry: &LabelRegistry,
    unknown: UnknownLabels,
) -> Result<CorpusLoad, CorpusError> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut documents = Vec::new();
    let mut unknown_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut deserializer = serde_json::Deserializer::from_str(&line);
        let mut doc: Document = serde_path_to_error::deserialize(&mut deserializer).map_err(
            |e| CorpusError::MalformedRecord {
                line: line_no,
                detail: format!("field '{}': {}", e.path(), e.inner()),
            },
        )?;
        if doc.doc_id.is_empty() {
            return Err(CorpusError::EmptyDocId { line: line_no });
        }
        if !seen_ids.insert(doc.doc_id.clone()) {
            return Err(CorpusError::DuplicateDocId {
                doc_id: doc.doc_id,
                line: line_no,
            });
        }
        if unknown == UnknownLabels::Collect {
            let mut kept = Vec::with_capacity(doc.annotations.len());
            for ann in doc.annotations {
                if registry.index_of(&ann.label).is_some() {
                    kept.push(ann);
                } else {
                    *unknown_counts.entry(ann.label).or_insert(0) += 1;
                }
            }
            doc.annotations = kept;
        }
        doc.validate(registry)?;
        documents.push(doc);
    }

    Ok(CorpusLoad {
        documents,
        unknown_labels: unknown_counts,
    })
}

/// Writes documents as JSON-lines, one per line, in the given order.
pub fn save_corpus(path: &Path, documents: &[Document]) -> Result<(), CorpusError> {
    let mut file = fs::File::create(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    for doc in documents {
        let line = serde_json::to_string(doc).expect("document serializes");
        file.write_all(line.as_bytes()).map_err(io_err)?;
        file.write_all(b"\n").map_err(io_err)?;
    }
    Ok(())
}

/// Aggregate annotation counts over a corpus.
///
/// `mean_per_label` and `std_per_label` are taken over the registry's labels
/// (zero-count labels included); the standard deviation is the population
/// form (divide by N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_documents: u64,
    pub n_annotations: u64,
    pub per_label_counts: BTreeMap<String, u64>,
    pub mean_per_label: f64,
    pub std_per_label: f64,
}

/// Counts annotations per registry label. Annotations whose label is outside
/// the registry are not counted, which keeps `n_annotations` equal to the sum
/// of `per_label_counts`.
pub fn compute_stats(corpus: &[Document], registry: &LabelRegistry) -> CorpusStats {
    let mut per_label_counts: BTreeMap<String, u64> =
        registry.ids().map(|id| (id.to_string(), 0)).collect();
    for doc in corpus {
        for ann in &doc.annotations {
            if let Some(count) = per_label_counts.get_mut(&ann.label) {
                *count += 1;
            }
        }
    }
    let n_annotations: u64 = per_label_counts.values().sum();
    let n_labels = registry.len();
    let (mean, std) = if n_labels == 0 {
        (0.0, 0.0)
    } else {
        let mean = n_annotations as f64 / n_labels as f64;
        let var = per_label_counts
            .values()
            .map(|&c| {
                let d = c as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / n_labels as f64;
        (mean, var.sqrt())
    };
    CorpusStats {
        n_documents: corpus.len() as u64,
        n_annotations,
        per_label_counts,
        mean_per_label: mean,
        std_per_label: std,
    }
}

/// Keeps exactly the labels with at least `min_support` annotations, in
/// registry order, and returns the dropped label ids.
///
/// The corpus itself is untouched: annotations carrying dropped labels stay
/// in the documents, so re-filtering at a different threshold needs no
/// reload. Dataset building later ignores them.
pub fn filter_labels_by_support(
    corpus: &[Document],
    registry: &LabelRegistry,
    min_support: u64,
) -> Result<(LabelRegistry, Vec<String>), CorpusError> {
    let stats = compute_stats(corpus, registry);
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for def in &registry.labels {
        let count = stats.per_label_counts.get(&def.id).copied().unwrap_or(0);
        if count >= min_support {
            kept.push(def.clone());
        } else {
            dropped.push(def.id.clone());
        }
    }
    if kept.is_empty() {
        return Err(CorpusError::AllLabelsDropped { min_support });
    }
    Ok((
        LabelRegistry {
            labels: kept,
            min_support,
        },
        dropped,
    ))
}

/// Collapses annotations identical in (start, end, label) to one, keeping a
/// deterministic order sorted by (start, end, label). Annotator attribution
/// of the first entry in sort order survives.
pub fn dedupe_annotations(document: &Document) -> Document {
    let mut annotations = document.annotations.clone();
    annotations.sort_by(|a, b| {
        (a.start, a.end, &a.label, &a.annotator).cmp(&(b.start, b.end, &b.label, &b.annotator))
    });
    annotations.dedup_by(|a, b| a.start == b.start && a.end == b.end && a.label == b.label);
    Document {
        doc_id: document.doc_id.clone(),
        text: document.text.clone(),
        annotations,
    }
}
