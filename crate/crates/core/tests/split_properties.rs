//! Leakage and balance properties of document-level splits and folds.

use std::collections::BTreeSet;

use intentscan::corpus::{LabelDef, LabelRegistry};
use intentscan::dataset::{
    make_folds, split_train_test, Dataset, Provenance, SentenceExample, SplitSpec,
};
use intentscan::segment::Sentence;
use proptest::prelude::*;

fn dataset_with_docs(n: usize) -> Dataset {
    let registry = LabelRegistry::new(
        vec![LabelDef {
            id: "request_ogd".into(),
            name: "Request OGD".into(),
        }],
        0,
    )
    .unwrap();
    let examples = (0..n)
        .flat_map(|d| {
            (0..1 + d % 3).map(move |s| SentenceExample {
                sentence: Sentence {
                    doc_id: format!("doc-{d:03}"),
                    start: s * 10,
                    end: s * 10 + 5,
                    text: format!("plan ogd {d} {s}"),
                },
                label_vector: vec![d % 2 == 0],
            })
        })
        .collect();
    Dataset {
        examples,
        registry,
        provenance: Provenance {
            corpus_hash: "c".into(),
            segmenter_config_hash: "s".into(),
        },
    }
}

proptest! {
    #[test]
    fn split_partitions_documents_without_leakage(
        n in 2usize..50,
        seed in any::<u64>(),
        frac in 0.05f64..0.95,
    ) {
        let dataset = dataset_with_docs(n);
        let spec = SplitSpec { test_fraction: frac, k_folds: 2, seed };
        let split = split_train_test(&dataset, &spec).unwrap();

        let expected_test = (frac * n as f64).round() as usize;
        prop_assert_eq!(split.assignment.test_docs.len(), expected_test);
        prop_assert_eq!(split.assignment.train_docs.len(), n - expected_test);

        let train: BTreeSet<&String> = split.assignment.train_docs.iter().collect();
        let test: BTreeSet<&String> = split.assignment.test_docs.iter().collect();
        prop_assert!(train.is_disjoint(&test));
        let mut union: Vec<&String> = train.iter().chain(test.iter()).copied().collect();
        union.sort();
        let all = dataset.doc_ids();
        prop_assert_eq!(union, all.iter().collect::<Vec<_>>());

        for example in &split.train.examples {
            prop_assert!(train.contains(&example.sentence.doc_id));
        }
        for example in &split.test.examples {
            prop_assert!(test.contains(&example.sentence.doc_id));
        }
        prop_assert_eq!(
            split.train.examples.len() + split.test.examples.len(),
            dataset.examples.len()
        );

        let again = split_train_test(&dataset, &spec).unwrap();
        prop_assert_eq!(again.assignment, split.assignment);
    }

    #[test]
    fn folds_partition_documents_evenly(
        n in 2usize..50,
        k in 2usize..8,
        seed in any::<u64>(),
    ) {
        prop_assume!(k <= n);
        let dataset = dataset_with_docs(n);
        let spec = SplitSpec { test_fraction: 0.2, k_folds: k, seed };
        let folds = make_folds(&dataset, &spec).unwrap();

        prop_assert_eq!(folds.k, k);
        prop_assert_eq!(folds.fold_of_doc.len(), n);
        prop_assert!(folds.fold_of_doc.values().all(|&f| f < k));

        let sizes: Vec<usize> = (0..k).map(|f| folds.fold_docs(f).len()).collect();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        let min = sizes.iter().min().unwrap();
        let max = sizes.iter().max().unwrap();
        prop_assert!(max - min <= 1, "fold sizes {:?}", sizes);

        let again = make_folds(&dataset, &spec).unwrap();
        prop_assert_eq!(again, folds);
    }
}
