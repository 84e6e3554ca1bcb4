//! Reconciliation properties: finding conservation, monotonicity under
//! new orders, and ledger-order independence.

use std::collections::BTreeSet;

use intentscan::reconcile::{
    reconcile, summarize, Detection, FindingStatus, IntentOrderMap, OrderRecord,
};
use proptest::prelude::*;

fn doc_id() -> impl Strategy<Value = String> {
    (0u8..10).prop_map(|d| format!("doc{d}"))
}

fn intent() -> impl Strategy<Value = String> {
    (0u8..5).prop_map(|i| format!("intent{i}"))
}

fn order_type() -> impl Strategy<Value = String> {
    (0u8..6).prop_map(|t| format!("type{t}"))
}

fn arb_detections() -> impl Strategy<Value = Vec<Detection>> {
    prop::collection::vec((doc_id(), intent()), 0..25).prop_map(|pairs| {
        pairs
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, label))| Detection {
                doc_id,
                label,
                text: format!("evidence sentence {i}"),
                start: i * 40,
                end: i * 40 + 20,
                prob: None,
            })
            .collect()
    })
}

fn arb_orders() -> impl Strategy<Value = Vec<OrderRecord>> {
    prop::collection::vec((doc_id(), order_type()), 0..25).prop_map(|pairs| {
        pairs
            .into_iter()
            .map(|(doc_id, order_type)| OrderRecord {
                doc_id,
                order_type,
                timestamp: "2024-06-01".to_string(),
            })
            .collect()
    })
}

fn arb_map() -> impl Strategy<Value = IntentOrderMap> {
    prop::collection::btree_map(
        intent(),
        prop::collection::btree_set(order_type(), 1..4),
        0..5,
    )
    .prop_map(|map| IntentOrderMap { map })
}

proptest! {
    #[test]
    fn report_matches_brute_force_and_conserves_detections(
        detections in arb_detections(),
        orders in arb_orders(),
        map in arb_map(),
    ) {
        let report = reconcile(&detections, &orders, &map);
        prop_assert_eq!(report.findings.len(), detections.len());
        prop_assert_eq!(&report.summary, &summarize(&report.findings));

        for (finding, detection) in report.findings.iter().zip(&detections) {
            prop_assert_eq!(&finding.doc_id, &detection.doc_id);
            prop_assert_eq!(&finding.intent, &detection.label);
            let expected = match map.order_types_for(&detection.label) {
                None => FindingStatus::Unmappable,
                Some(types) => {
                    if orders.iter().any(|o| {
                        o.doc_id == detection.doc_id && types.contains(&o.order_type)
                    }) {
                        FindingStatus::Satisfied
                    } else {
                        FindingStatus::MissingOrder
                    }
                }
            };
            prop_assert_eq!(finding.status, expected);
        }
    }

    #[test]
    fn adding_orders_is_monotone(
        detections in arb_detections(),
        orders in arb_orders(),
        extra in arb_orders(),
        map in arb_map(),
    ) {
        let before = reconcile(&detections, &orders, &map);
        let mut grown = orders.clone();
        grown.extend(extra);
        let after = reconcile(&detections, &grown, &map);
        for (b, a) in before.findings.iter().zip(&after.findings) {
            match b.status {
                FindingStatus::Satisfied => prop_assert_eq!(a.status, FindingStatus::Satisfied),
                FindingStatus::Unmappable => prop_assert_eq!(a.status, FindingStatus::Unmappable),
                FindingStatus::MissingOrder => prop_assert!(
                    a.status == FindingStatus::MissingOrder
                        || a.status == FindingStatus::Satisfied
                ),
            }
        }
    }

    #[test]
    fn ledger_order_is_irrelevant(
        detections in arb_detections(),
        orders in arb_orders(),
        map in arb_map(),
    ) {
        let forward = reconcile(&detections, &orders, &map);
        let mut reversed = orders.clone();
        reversed.reverse();
        prop_assert_eq!(reconcile(&detections, &reversed, &map), forward.clone());

        let mut sorted = orders.clone();
        sorted.sort_by(|a, b| (&a.doc_id, &a.order_type).cmp(&(&b.doc_id, &b.order_type)));
        prop_assert_eq!(reconcile(&detections, &sorted, &map), forward);
    }

    #[test]
    fn duplicate_orders_change_nothing(
        detections in arb_detections(),
        orders in arb_orders(),
        map in arb_map(),
    ) {
        let base = reconcile(&detections, &orders, &map);
        let mut doubled = orders.clone();
        doubled.extend(orders.iter().cloned());
        prop_assert_eq!(reconcile(&detections, &doubled, &map), base);
    }
}

#[test]
fn unmappable_statuses_survive_any_ledger() {
    let detections = vec![Detection {
        doc_id: "doc1".into(),
        label: "never_mapped".into(),
        text: "plan something".into(),
        start: 0,
        end: 14,
        prob: None,
    }];
    let map = IntentOrderMap::default();
    let orders: Vec<OrderRecord> = (0..6)
        .map(|i| OrderRecord {
            doc_id: "doc1".into(),
            order_type: format!("type{i}"),
            timestamp: "2024-06-01".into(),
        })
        .collect();
    let report = reconcile(&detections, &orders, &map);
    assert_eq!(report.findings[0].status, FindingStatus::Unmappable);
    let unmapped: BTreeSet<_> = report
        .summary
        .iter()
        .filter(|(_, c)| c.unmappable > 0)
        .map(|(i, _)| i.clone())
        .collect();
    assert!(unmapped.contains("never_mapped"));
}
