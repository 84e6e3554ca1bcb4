//! Bag-of-n-grams TF-IDF featurization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::dataset::Dataset;

/// Lowercases and splits on non-alphanumeric runs. Numbers stay as tokens,
/// so "BMI 37.5" tokenizes to ["bmi", "37", "5"].
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn ngrams(tokens: &[String], max_ngram: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in 1..=max_ngram {
        for window in tokens.windows(n) {
            out.push(window.join(" "));
        }
    }
    out
}

/// N-gram feature space built from training data only. The index of an
/// n-gram is its position in lexicographic order, so identical data always
/// yields identical indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    ngrams: Vec<String>,
    document_frequency: Vec<usize>,
    n_documents: usize,
    max_ngram: usize,
}

impl Vocabulary {
    pub fn n_features(&self) -> usize {
        self.ngrams.len()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn max_ngram(&self) -> usize {
        self.max_ngram
    }

    pub fn index_of(&self, ngram: &str) -> Option<usize> {
        self.ngrams.binary_search_by(|g| g.as_str().cmp(ngram)).ok()
    }

    pub fn ngram_at(&self, index: usize) -> Option<&str> {
        self.ngrams.get(index).map(String::as_str)
    }

    pub fn document_frequency_at(&self, index: usize) -> Option<usize> {
        self.document_frequency.get(index).copied()
    }

    /// Smoothed inverse document frequency: ln((1+N)/(1+df)) + 1.
    pub fn idf(&self, index: usize) -> f64 {
        let df = self.document_frequency[index];
        ((1.0 + self.n_documents as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    /// Checks invariants on a vocabulary read from disk: lexicographic
    /// order without duplicates and plausible document frequencies.
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.ngrams.len() != self.document_frequency.len() {
            return Err(ClassifierError::MalformedModel(
                "vocabulary ngram and document_frequency lengths differ".to_string(),
            ));
        }
        if self.max_ngram == 0 {
            return Err(ClassifierError::MalformedModel(
                "vocabulary max_ngram must be at least 1".to_string(),
            ));
        }
        for pair in self.ngrams.windows(2) {
            if pair[0] >= pair[1] {
                return Err(ClassifierError::MalformedModel(format!(
                    "vocabulary not in strict lexicographic order near '{}'",
                    pair[1]
                )));
            }
        }
        for (i, &df) in self.document_frequency.iter().enumerate() {
            if df == 0 || df > self.n_documents {
                return Err(ClassifierError::MalformedModel(format!(
                    "document frequency {} out of range for n-gram '{}'",
                    df, self.ngrams[i]
                )));
            }
        }
        Ok(())
    }
}

/// Collects word unigrams up to `max_ngram`-grams from the training
/// sentences, keeping those whose document frequency is at least
/// `min_df` (counted per sentence example, at most once each).
pub fn build_vocabulary(
    train: &Dataset,
    min_df: usize,
    max_ngram: usize,
) -> Result<Vocabulary, ClassifierError> {
    if train.examples.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if max_ngram == 0 {
        return Err(ClassifierError::ZeroNgramOrder);
    }
    let min_df = min_df.max(1);
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for example in &train.examples {
        let tokens = tokenize(&example.sentence.text);
        let mut seen: BTreeMap<String, ()> = BTreeMap::new();
        for gram in ngrams(&tokens, max_ngram) {
            seen.entry(gram).or_insert(());
        }
        for (gram, ()) in seen {
            *df.entry(gram).or_insert(0) += 1;
        }
    }
    let mut ngrams = Vec::new();
    let mut document_frequency = Vec::new();
    for (gram, count) in df {
        if count >= min_df {
            ngrams.push(gram);
            document_frequency.push(count);
        }
    }
    if ngrams.is_empty() {
        return Err(ClassifierError::EmptyVocabulary);
    }
    Ok(Vocabulary {
        ngrams,
        document_frequency,
        n_documents: train.examples.len(),
        max_ngram,
    })
}

/// Sparse TF-IDF vector: (feature index, weight) pairs with strictly
/// increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// Builds a vector from raw pairs, enforcing the sparse invariants.
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self, ClassifierError> {
        for pair in entries.windows(2) {
            if pair[0].0 >= pair[1].0 {
                return Err(ClassifierError::InvalidFeatureVector(format!(
                    "indices not strictly increasing at {}",
                    pair[1].0
                )));
            }
        }
        if let Some((i, w)) = entries.iter().find(|(_, w)| *w == 0.0 || !w.is_finite()) {
            return Err(ClassifierError::InvalidFeatureVector(format!(
                "weight {w} at index {i} (zero or non-finite)"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dot product against a dense weight vector.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_dense(&self, n_features: usize) -> Vec<f64> {
        let mut dense = vec![0.0; n_features];
        for &(i, w) in &self.entries {
            dense[i] = w;
        }
        dense
    }
}

/// TF-IDF featurization of one sentence: raw n-gram counts times smoothed
/// idf, L2-normalized. Out-of-vocabulary n-grams are ignored; all-OOV text
/// gives the empty vector.
pub fn featurize(text: &str, vocabulary: &Vocabulary) -> FeatureVector {
    let tokens = tokenize(text);
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for gram in ngrams(&tokens, vocabulary.max_ngram) {
        if let Some(index) = vocabulary.index_of(&gram) {
            *counts.entry(index).or_insert(0.0) += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(index, tf)| (index, tf * vocabulary.idf(index)))
        .collect();
    let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for entry in &mut entries {
            entry.1 /= norm;
        }
    }
    FeatureVector { entries }
}

/// Test fixture: a dataset of bare sentences under a one-label registry.
#[cfg(test)]
pub(crate) fn dataset_from_texts(texts: &[&str]) -> Dataset {
    use crate::corpus::{LabelDef, LabelRegistry};
    use crate::dataset::{Provenance, SentenceExample};
    use crate::segment::Sentence;

    let registry = LabelRegistry::new(
        vec![LabelDef {
            id: "x".into(),
            name: "X".into(),
        }],
        0,
    )
    .unwrap();
    Dataset {
        examples: texts
            .iter()
            .enumerate()
            .map(|(i, text)| SentenceExample {
                sentence: Sentence {
                    doc_id: format!("d{i}"),
                    start: 0,
                    end: text.chars().count(),
                    text: (*text).to_string(),
                },
                label_vector: vec![false],
            })
            .collect(),
        registry,
        provenance: Provenance {
            corpus_hash: "c".into(),
            segmenter_config_hash: "s".into(),
        },
    }
}
