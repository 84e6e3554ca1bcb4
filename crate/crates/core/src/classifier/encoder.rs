//! Pluggable sentence encoders. The default backend densifies the tf-idf
//! features; anything that maps text to a fixed-width vector (for example a
//! served transformer) can stand in behind the same trait.

use super::features::{featurize, Vocabulary};

/// Maps a sentence to a fixed-width dense vector.
pub trait EncoderBackend {
    fn encode(&self, text: &str) -> Vec<f64>;

    /// Width of every vector returned by `encode`.
    fn dimension(&self) -> usize;
}

/// Tf-idf bag-of-ngrams encoder over a fitted vocabulary.
pub struct TfidfEncoder {
    vocabulary: Vocabulary,
}

impl TfidfEncoder {
    pub fn new(vocabulary: Vocabulary) -> Self {
        Self { vocabulary }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }
}

impl EncoderBackend for TfidfEncoder {
    fn encode(&self, text: &str) -> Vec<f64> {
        featurize(text, &self.vocabulary).to_dense(self.vocabulary.n_features())
    }

    fn dimension(&self) -> usize {
        self.vocabulary.n_features()
    }
}

#[cfg(test)]
mod tests {
    use super::super::features::{build_vocabulary, dataset_from_texts};
    use super::*;

    fn encoder() -> TfidfEncoder {
        let data = dataset_from_texts(&["book ogd", "repeat bloods", "ogd and bloods"]);
        TfidfEncoder::new(build_vocabulary(&data, 1, 2).unwrap())
    }

    #[test]
    fn encode_is_deterministic_and_fixed_width() {
        let enc = encoder();
        let a = enc.encode("book ogd today");
        let b = enc.encode("book ogd today");
        assert_eq!(a, b);
        assert_eq!(a.len(), enc.dimension());
        assert_eq!(enc.encode("").len(), enc.dimension());
    }

    #[test]
    fn encode_matches_the_sparse_features() {
        let enc = encoder();
        let dense = enc.encode("repeat bloods");
        let sparse = featurize("repeat bloods", enc.vocabulary());
        assert_eq!(sparse.to_dense(enc.dimension()), dense);
        assert!(dense.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn unknown_words_encode_to_zero() {
        let enc = encoder();
        assert!(enc.encode("zzz qqq").iter().all(|&v| v == 0.0));
    }
}
