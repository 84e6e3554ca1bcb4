//! Reconciles detected follow-up intents against an orders ledger and
//! flags intents that never turned into an order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LabelRegistry;

#[derive(Debug, Error)]
pub enum ReconcileError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record on line {line}: {detail}")]
    MalformedLine { line: usize, detail: String },
    #[error("unparseable timestamp {value:?} on line {line}")]
    BadTimestamp { line: usize, value: String },
    #[error("empty order_type on line {line}")]
    EmptyOrderType { line: usize },
    #[error("empty doc_id on line {line}")]
    EmptyDocId { line: usize },
    #[error("malformed intent-order map: {0}")]
    MalformedMap(String),
    #[error("mapped intent {intent:?} is not in the label registry")]
    UnknownMappedIntent { intent: String },
    #[error("intent {intent:?} maps to an empty order_type set")]
    EmptyOrderTypes { intent: String },
}

/// One row of the orders ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub doc_id: String,
    pub order_type: String,
    pub timestamp: String,
}

/// Accepts RFC 3339, `YYYY-MM-DDTHH:MM:SS`, or a bare `YYYY-MM-DD` date.
pub fn timestamp_is_valid(value: &str) -> bool {
    DateTime::parse_from_rfc3339(value).is_ok()
        || NaiveDateTime::parse_from_str(value, "%Y-%m-%dT%H:%M:%S").is_ok()
        || NaiveDate::parse_from_str(value, "%Y-%m-%d").is_ok()
}

/// Reads an orders ledger (JSONL, one order per line). Record order is
/// preserved; blank lines are skipped.
pub fn load_orders(path: &Path) -> Result<Vec<OrderRecord>, ReconcileError> {
    let file = fs::File::open(path).map_err(|source| ReconcileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut orders = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|source| ReconcileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut de = serde_json::Deserializer::from_str(&line);
        let record: OrderRecord = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            ReconcileError::MalformedLine {
                line: line_no,
                detail: format!("field '{}': {}", e.path(), e.inner()),
            }
        })?;
        if record.doc_id.is_empty() {
            return Err(ReconcileError::EmptyDocId { line: line_no });
        }
        if record.order_type.is_empty() {
            return Err(ReconcileError::EmptyOrderType { line: line_no });
        }
        if !timestamp_is_valid(&record.timestamp) {
            return Err(ReconcileError::BadTimestamp {
                line: line_no,
                value: record.timestamp,
            });
        }
        orders.push(record);
    }
    Ok(orders)
}

pub fn save_orders(orders: &[OrderRecord], path: &Path) -> Result<(), ReconcileError> {
    let mut out = String::new();
    for order in orders {
        out.push_str(&serde_json::to_string(order).expect("order serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| ReconcileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Which order types satisfy each intent. The mapping is site
/// configuration; nothing in the model implies it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntentOrderMap {
    pub map: BTreeMap<String, BTreeSet<String>>,
}

impl IntentOrderMap {
    pub fn load(path: &Path) -> Result<Self, ReconcileError> {
        let bytes = fs::read(path).map_err(|source| ReconcileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let map: IntentOrderMap = serde_json::from_slice(&bytes)
            .map_err(|e| ReconcileError::MalformedMap(e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    pub fn save(&self, path: &Path) -> Result<(), ReconcileError> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("map serializes");
        bytes.push(b'\n');
        fs::write(path, bytes).map_err(|source| ReconcileError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Structural checks that need no registry.
    pub fn validate(&self) -> Result<(), ReconcileError> {
        for (intent, types) in &self.map {
            if types.is_empty() || types.iter().any(String::is_empty) {
                return Err(ReconcileError::EmptyOrderTypes {
                    intent: intent.clone(),
                });
            }
        }
        Ok(())
    }

    /// Additionally checks that every mapped intent is a registry label.
    pub fn validate_against(&self, registry: &LabelRegistry) -> Result<(), ReconcileError> {
        self.validate()?;
        for intent in self.map.keys() {
            if registry.index_of(intent).is_none() {
                return Err(ReconcileError::UnknownMappedIntent {
                    intent: intent.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn order_types_for(&self, intent: &str) -> Option<&BTreeSet<String>> {
        self.map.get(intent)
    }
}

/// One predicted intent occurrence with its evidence sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub doc_id: String,
    pub label: String,
    pub text: String,
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
}

/// Reads detections (JSONL) as written by `save_detections`.
pub fn load_detections(path: &Path) -> Result<Vec<Detection>, ReconcileError> {
    let file = fs::File::open(path).map_err(|source| ReconcileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut detections = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|source| ReconcileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut de = serde_json::Deserializer::from_str(&line);
        let detection: Detection = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            ReconcileError::MalformedLine {
                line: line_no,
                detail: format!("field '{}': {}", e.path(), e.inner()),
            }
        })?;
        if detection.doc_id.is_empty() {
            return Err(ReconcileError::EmptyDocId { line: line_no });
        }
        detections.push(detection);
    }
    Ok(detections)
}

pub fn save_detections(detections: &[Detection], path: &Path) -> Result<(), ReconcileError> {
    let mut out = String::new();
    for detection in detections {
        out.push_str(&serde_json::to_string(detection).expect("detection serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| ReconcileError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingStatus {
    /// Some order for the document has a type that satisfies the intent.
    Satisfied,
    /// The intent is mapped but no matching order exists for the document.
    MissingOrder,
    /// The detected label has no entry in the intent-order map.
    Unmappable,
}

impl FindingStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingStatus::Satisfied => "satisfied",
            FindingStatus::MissingOrder => "missing-order",
            FindingStatus::Unmappable => "unmappable",
        }
    }
}

/// One detection, judged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapFinding {
    pub doc_id: String,
    pub intent: String,
    pub evidence_text: String,
    pub evidence_start: usize,
    pub evidence_end: usize,
    pub status: FindingStatus,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub satisfied: u64,
    pub missing_order: u64,
    pub unmappable: u64,
}

/// Findings in detection order plus per-intent rollups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub findings: Vec<GapFinding>,
    pub summary: BTreeMap<String, StatusCounts>,
}

/// Recounts findings per intent; `GapReport.summary` always equals this.
pub fn summarize(findings: &[GapFinding]) -> BTreeMap<String, StatusCounts> {
    let mut summary: BTreeMap<String, StatusCounts> = BTreeMap::new();
    for finding in findings {
        let counts = summary.entry(finding.intent.clone()).or_default();
        match finding.status {
            FindingStatus::Satisfied => counts.satisfied += 1,
            FindingStatus::MissingOrder => counts.missing_order += 1,
            FindingStatus::Unmappable => counts.unmappable += 1,
        }
    }
    summary
}

/// Judges every detection: satisfied if any order for the same document
/// carries a satisfying order type, missing-order otherwise, unmappable if
/// the label has no map entry. Exactly one finding per detection, in input
/// order; the result does not depend on the order of the ledger rows.
pub fn reconcile(
    detections: &[Detection],
    orders: &[OrderRecord],
    map: &IntentOrderMap,
) -> GapReport {
    let mut orders_by_doc: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for order in orders {
        orders_by_doc
            .entry(order.doc_id.as_str())
            .or_default()
            .insert(order.order_type.as_str());
    }
    let findings: Vec<GapFinding> = detections
        .iter()
        .map(|d| {
            let status = match map.order_types_for(&d.label) {
                None => FindingStatus::Unmappable,
                Some(types) => {
                    let present = orders_by_doc
                        .get(d.doc_id.as_str())
                        .is_some_and(|have| types.iter().any(|t| have.contains(t.as_str())));
                    if present {
                        FindingStatus::Satisfied
                    } else {
                        FindingStatus::MissingOrder
                    }
                }
            };
            GapFinding {
                doc_id: d.doc_id.clone(),
                intent: d.label.clone(),
                evidence_text: d.text.clone(),
                evidence_start: d.start,
                evidence_end: d.end,
                status,
            }
        })
        .collect();
    let summary = summarize(&findings);
    GapReport { findings, summary }
}

fn tsv_field(value: &str) -> String {
    value.replace(['\t', '\n', '\r'], " ")
}

/// Renders the report as a tab-separated table with per-intent totals in
/// trailing comment lines.
pub fn render_gap_tsv(report: &GapReport) -> String {
    let mut out = String::from("DocId\tIntent\tStatus\tEvidenceStart\tEvidenceEnd\tEvidence\n");
    for f in &report.findings {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            tsv_field(&f.doc_id),
            tsv_field(&f.intent),
            f.status.as_str(),
            f.evidence_start,
            f.evidence_end,
            tsv_field(&f.evidence_text),
        ));
    }
    for (intent, counts) in &report.summary {
        out.push_str(&format!(
            "# {intent}: satisfied={} missing-order={} unmappable={}\n",
            counts.satisfied, counts.missing_order, counts.unmappable,
        ));
    }
    out
}
