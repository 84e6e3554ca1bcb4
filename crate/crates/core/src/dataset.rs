//! Turns span-annotated documents plus their segmentation into multilabel
//! sentence examples, and produces deterministic document-level train/test
//! splits and cross-validation folds.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, LabelRegistry};
use crate::hash::sha256_json;
use crate::segment::{overlaps, Sentence, SegmenterConfig};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed dataset record at line {line}: {detail}")]
    MalformedRecord { line: usize, detail: String },
    #[error("label registry is empty")]
    EmptyRegistry,
    #[error("dataset has no examples")]
    EmptyDataset,
    #[error("need at least 2 documents to split, corpus has {n}")]
    TooFewDocuments { n: usize },
    #[error("cannot make {k} folds from {n} documents")]
    FoldsExceedDocuments { k: usize, n: usize },
    #[error("invalid split spec: {0}")]
    InvalidSpec(String),
    #[error("dataset record at line {line} uses label '{label}' not present in the registry")]
    UnknownLabel { label: String, line: usize },
    #[error("sentence batch {index} belongs to document '{found}', expected '{expected}'")]
    DocumentMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("dataset meta file missing: {path}")]
    MissingMeta { path: String },
    #[error("dataset provenance fields must be non-empty")]
    EmptyProvenance,
}

/// Hashes tying a dataset back to the exact corpus bytes and segmenter
/// settings that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub corpus_hash: String,
    pub segmenter_config_hash: String,
}

impl Provenance {
    /// Provenance for an in-memory corpus: hash of its canonical JSON plus
    /// hash of the segmenter config.
    pub fn compute(corpus: &[Document], config: &SegmenterConfig) -> Self {
        Self {
            corpus_hash: sha256_json(corpus).expect("documents serialize"),
            segmenter_config_hash: sha256_json(config).expect("config serializes"),
        }
    }

    fn validate(&self) -> Result<(), DatasetError> {
        if self.corpus_hash.is_empty() || self.segmenter_config_hash.is_empty() {
            return Err(DatasetError::EmptyProvenance);
        }
        Ok(())
    }
}

/// One sentence with its binary label vector, indexed in registry order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceExample {
    pub sentence: Sentence,
    pub label_vector: Vec<bool>,
}

impl SentenceExample {
    pub fn doc_id(&self) -> &str {
        &self.sentence.doc_id
    }
}

/// Sentence examples plus the registry their label vectors are indexed by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub examples: Vec<SentenceExample>,
    pub registry: LabelRegistry,
    pub provenance: Provenance,
}

impl Dataset {
    /// Sorted unique ids of the documents contributing examples.
    pub fn doc_ids(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.examples.iter().map(|e| e.doc_id()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// New dataset holding only examples from the given documents, order
    /// preserved.
    pub fn subset(&self, doc_ids: &BTreeSet<String>) -> Dataset {
        Dataset {
            examples: self
                .examples
                .iter()
                .filter(|e| doc_ids.contains(e.doc_id()))
                .cloned()
                .collect(),
            registry: self.registry.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Train/test split and cross-validation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(default = "SplitSpec::default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "SplitSpec::default_k_folds")]
    pub k_folds: usize,
    pub seed: u64,
}

impl SplitSpec {
    fn default_test_fraction() -> f64 {
        0.20
    }

    fn default_k_folds() -> usize {
        5
    }

    pub fn new(test_fraction: f64, k_folds: usize, seed: u64) -> Result<Self, DatasetError> {
        let spec = Self {
            test_fraction,
            k_folds,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(DatasetError::InvalidSpec(format!(
                "test_fraction must be in (0,1), got {}",
                self.test_fraction
            )));
        }
        if self.k_folds < 2 {
            return Err(DatasetError::InvalidSpec(format!(
                "k_folds must be at least 2, got {}",
                self.k_folds
            )));
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: Self::default_test_fraction(),
            k_folds: Self::default_k_folds(),
            seed: 0,
        }
    }
}

/// Which documents landed on each side of a train/test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train_docs: Vec<String>,
    pub test_docs: Vec<String>,
    pub test_fraction: f64,
    pub seed: u64,
}

/// A train/test split with the document assignment kept for audit.
#[derive(Debug, Clone)]
pub struct TrainTestSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub assignment: SplitAssignment,
}

/// Document-to-fold map for k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of_doc: BTreeMap<String, usize>,
    pub k: usize,
}

impl FoldAssignment {
    /// Doc ids of one fold, sorted.
    pub fn fold_docs(&self, fold: usize) -> BTreeSet<String> {
        self.fold_of_doc
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(d, _)| d.clone())
            .collect()
    }
}

/// Projects annotations onto sentences. A sentence receives label `i`
/// exactly when some annotation with kept label `i` shares at least one
/// character with the sentence span. With `include_negatives` off,
/// sentences with all-zero vectors are dropped.
pub fn build_examples(
    corpus: &[Document],
    sentences_per_doc: &[Vec<Sentence>],
    registry: &LabelRegistry,
    include_negatives: bool,
    provenance: Provenance,
) -> Result<Dataset, DatasetError> {
    if registry.is_empty() {
        return Err(DatasetError::EmptyRegistry);
    }
    provenance.validate()?;
    let mut examples = Vec::new();
    for (index, (doc, sentences)) in corpus.iter().zip(sentences_per_doc).enumerate() {
        for sentence in sentences {
            if sentence.doc_id != doc.doc_id {
                return Err(DatasetError::DocumentMismatch {
                    index,
                    expected: doc.doc_id.clone(),
                    found: sentence.doc_id.clone(),
                });
            }
            let mut label_vector = vec![false; registry.len()];
            for ann in &doc.annotations {
                if let Some(idx) = registry.index_of(&ann.label) {
                    if overlaps(ann, sentence.start, sentence.end) {
                        label_vector[idx] = true;
                    }
                }
            }
            if include_negatives || label_vector.iter().any(|&b| b) {
                examples.push(SentenceExample {
                    sentence: sentence.clone(),
                    label_vector,
                });
            }
        }
    }
    Ok(Dataset {
        examples,
        registry: registry.clone(),
        provenance,
    })
}

/// Shuffles document ids under the spec's seed and reserves
/// `round(test_fraction * n_docs)` of them as the test side. All sentences
/// of a document land on the same side.
pub fn split_train_test(dataset: &Dataset, spec: &SplitSpec) -> Result<TrainTestSplit, DatasetError> {
    spec.validate()?;
    if dataset.examples.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let mut docs = dataset.doc_ids();
    if docs.len() < 2 {
        return Err(DatasetError::TooFewDocuments { n: docs.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    docs.shuffle(&mut rng);
    let n_test = (spec.test_fraction * docs.len() as f64).round() as usize;
    let (test_docs, train_docs) = docs.split_at(n_test);
    let mut test_docs = test_docs.to_vec();
    let mut train_docs = train_docs.to_vec();
    test_docs.sort();
    train_docs.sort();
    let test_set: BTreeSet<String> = test_docs.iter().cloned().collect();
    let train_set: BTreeSet<String> = train_docs.iter().cloned().collect();
    Ok(TrainTestSplit {
        train: dataset.subset(&train_set),
        test: dataset.subset(&test_set),
        assignment: SplitAssignment {
            train_docs,
            test_docs,
            test_fraction: spec.test_fraction,
            seed: spec.seed,
        },
    })
}

/// Assigns each document of `dataset` to one of `spec.k_folds` folds.
/// Fold sizes differ by at most one document; the leading folds take the
/// remainder.
pub fn make_folds(dataset: &Dataset, spec: &SplitSpec) -> Result<FoldAssignment, DatasetError> {
    spec.validate()?;
    let mut docs = dataset.doc_ids();
    let k = spec.k_folds;
    if k > docs.len() {
        return Err(DatasetError::FoldsExceedDocuments { k, n: docs.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    docs.shuffle(&mut rng);
    let n = docs.len();
    let base = n / k;
    let remainder = n % k;
    let mut fold_of_doc = BTreeMap::new();
    let mut cursor = 0usize;
    for fold in 0..k {
        let size = base + usize::from(fold < remainder);
        for doc in &docs[cursor..cursor + size] {
            fold_of_doc.insert(doc.clone(), fold);
        }
        cursor += size;
    }
    Ok(FoldAssignment { fold_of_doc, k })
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetRecord {
    doc_id: String,
    start: usize,
    end: usize,
    text: String,
    labels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetMeta {
    registry: LabelRegistry,
    provenance: Provenance,
}

/// Path of the sidecar holding registry and provenance for a dataset file:
/// `train.jsonl` -> `train.meta.json`.
pub fn meta_path(dataset_path: &Path) -> PathBuf {
    dataset_path.with_extension("meta.json")
}

/// Writes the dataset as JSON-lines of `{doc_id, start, end, text, labels}`
/// plus the registry/provenance sidecar next to it.
pub fn save_dataset(path: &Path, dataset: &Dataset) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io_err)?;
    for example in &dataset.examples {
        let labels = dataset
            .registry
            .labels
            .iter()
            .zip(&example.label_vector)
            .filter(|(_, &on)| on)
            .map(|(def, _)| def.id.clone())
            .collect();
        let record = DatasetRecord {
            doc_id: example.sentence.doc_id.clone(),
            start: example.sentence.start,
            end: example.sentence.end,
            text: example.sentence.text.clone(),
            labels,
        };
        let line = serde_json::to_string(&record).expect("record serializes");
        file.write_all(line.as_bytes()).map_err(io_err)?;
        file.write_all(b"\n").map_err(io_err)?;
    }
    let meta = DatasetMeta {
        registry: dataset.registry.clone(),
        provenance: dataset.provenance.clone(),
    };
    let meta_file = meta_path(path);
    let mut bytes = serde_json::to_vec_pretty(&meta).expect("meta serializes");
    bytes.push(b'\n');
    fs::write(&meta_file, bytes).map_err(|source| DatasetError::Io {
        path: meta_file.display().to_string(),
        source,
    })
}

/// Reads a dataset written by [`save_dataset`], reconstructing label vectors
/// from the sidecar's registry.
pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let meta_file = meta_path(path);
    if !meta_file.exists() {
        return Err(DatasetError::MissingMeta {
            path: meta_file.display().to_string(),
        });
    }
    let meta_bytes = fs::read(&meta_file).map_err(|source| DatasetError::Io {
        path: meta_file.display().to_string(),
        source,
    })?;
    let meta: DatasetMeta =
        serde_json::from_slice(&meta_bytes).map_err(|e| DatasetError::MalformedRecord {
            line: e.line(),
            detail: format!("{}: {}", meta_file.display(), e),
        })?;
    meta.provenance.validate()?;

    let file = fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut examples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| DatasetError::MalformedRecord {
                line: line_no,
                detail: e.to_string(),
            })?;
        let mut label_vector = vec![false; meta.registry.len()];
        for label in &record.labels {
            match meta.registry.index_of(label) {
                Some(i) => label_vector[i] = true,
                None => {
                    return Err(DatasetError::UnknownLabel {
                        label: label.clone(),
                        line: line_no,
                    })
                }
            }
        }
        examples.push(SentenceExample {
            sentence: Sentence {
                doc_id: record.doc_id,
                start: record.start,
                end: record.end,
                text: record.text,
            },
            label_vector,
        });
    }
    Ok(Dataset {
        examples,
        registry: meta.registry,
        provenance: meta.provenance,
    })
}
