//! Offset-preserving sentence segmentation tuned for clinical note text.
//!
//! EHR prose mixes ordinary sentences with bullet lists, headings, dosing
//! shorthand ("40mg o.d.") and decimals, so the splitter is rule-based: it
//! breaks on terminal punctuation and configurable delimiters, with
//! abbreviation, decimal, and lowercase-continuation guards. Every emitted
//! segment carries character offsets into the original text and its `text`
//! is exactly the slice at those offsets, never a rewritten copy.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, SpanAnnotation};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed segmenter config: {0}")]
    MalformedConfig(String),
    #[error("segmenter config: delimiter glyph must not be empty")]
    EmptyDelimiterGlyph,
}

/// A delimiter that forces a segment break immediately before the glyph.
///
/// With `line_start_only` set, the glyph only acts as a delimiter when
/// nothing but whitespace precedes it on its line and whitespace (or end of
/// text) follows it; that keeps hyphens in "-ve" or "T2-weighted" intact
/// while still splitting dash bullets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelimiterRule {
    pub glyph: String,
    #[serde(default)]
    pub line_start_only: bool,
}

/// Segmenter settings. All fields have defaults, so a config file may list
/// only the ones it overrides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmenterConfig {
    #[serde(default = "default_terminal_punctuation")]
    pub terminal_punctuation: BTreeSet<char>,
    #[serde(default = "default_extra_delimiters")]
    pub extra_delimiters: Vec<DelimiterRule>,
    /// Lowercased tokens, trailing dot included, that never end a sentence.
    #[serde(default = "default_abbreviation_exceptions")]
    pub abbreviation_exceptions: BTreeSet<String>,
    /// Segments shorter than this after trimming are dropped (minimum 1).
    #[serde(default = "default_min_segment_chars")]
    pub min_segment_chars: usize,
}

fn default_terminal_punctuation() -> BTreeSet<char> {
    ['.', '!', '?'].into_iter().collect()
}

fn default_extra_delimiters() -> Vec<DelimiterRule> {
    vec![
        DelimiterRule {
            glyph: "\n".to_string(),
            line_start_only: false,
        },
        DelimiterRule {
            glyph: "•".to_string(),
            line_start_only: false,
        },
        DelimiterRule {
            glyph: "-".to_string(),
            line_start_only: true,
        },
        DelimiterRule {
            glyph: "*".to_string(),
            line_start_only: true,
        },
    ]
}

fn default_abbreviation_exceptions() -> BTreeSet<String> {
    [
        "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "vs.", "no.", "e.g.", "i.e.", "etc.",
        "approx.", "b.d.", "o.d.", "t.d.s.", "q.d.s.", "p.r.n.", "i.m.", "i.v.", "s.c.", "appt.",
        "dept.", "fig.", "pt.", "wt.", "hx.", "rx.",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn default_min_segment_chars() -> usize {
    1
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            terminal_punctuation: default_terminal_punctuation(),
            extra_delimiters: default_extra_delimiters(),
            abbreviation_exceptions: default_abbreviation_exceptions(),
            min_segment_chars: default_min_segment_chars(),
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<(), SegmentError> {
        if self.extra_delimiters.iter().any(|d| d.glyph.is_empty()) {
            return Err(SegmentError::EmptyDelimiterGlyph);
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SegmentError> {
        let bytes = fs::read(path).map_err(|source| SegmentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: SegmenterConfig = serde_json::from_slice(&bytes)
            .map_err(|e| SegmentError::MalformedConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<(), SegmentError> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("config serializes");
        bytes.push(b'\n');
        fs::write(path, bytes).map_err(|source| SegmentError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// A segment of one document's text, in character offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// A segment tagged with the document it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

struct Compiled {
    terminal: BTreeSet<char>,
    delimiters: Vec<(Vec<char>, bool)>,
    abbreviations: BTreeSet<String>,
    min_len: usize,
}

impl Compiled {
    fn from(config: &SegmenterConfig) -> Self {
        Self {
            terminal: config.terminal_punctuation.clone(),
            delimiters: config
                .extra_delimiters
                .iter()
                .filter(|d| !d.glyph.is_empty())
                .map(|d| (d.glyph.chars().collect(), d.line_start_only))
                .collect(),
            abbreviations: config
                .abbreviation_exceptions
                .iter()
                .map(|a| a.to_lowercase())
                .collect(),
            min_len: config.min_segment_chars.max(1),
        }
    }
}

/// Splits `text` into segments. Segments never overlap, appear in text
/// order, and each `Segment::text` equals the character slice
/// `text[start..end]`.
pub fn segment_text(text: &str, config: &SegmenterConfig) -> Vec<Segment> {
    let cfg = Compiled::from(config);
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut segments = Vec::new();
    let mut seg_start = 0usize;
    let mut line_has_content = false;
    let mut i = 0usize;

    while i < n {
        let c = chars[i];

        if let Some(glyph_len) = match_delimiter(&cfg, &chars, i, line_has_content) {
            flush(&mut segments, &chars, &cfg, seg_start, i);
            seg_start = i;
            for &g in &chars[i..i + glyph_len] {
                if g == '\n' {
                    line_has_content = false;
                } else if !g.is_whitespace() {
                    line_has_content = true;
                }
            }
            i += glyph_len;
            continue;
        }

        if cfg.terminal.contains(&c) && breaks_at_terminal(&cfg, &chars, i) {
            flush(&mut segments, &chars, &cfg, seg_start, i + 1);
            seg_start = i + 1;
        }

        if c == '\n' {
            line_has_content = false;
        } else if !c.is_whitespace() {
            line_has_content = true;
        }
        i += 1;
    }
    flush(&mut segments, &chars, &cfg, seg_start, n);
    segments
}

/// Segments a document's text and tags each segment with its `doc_id`.
pub fn segment_document(doc: &Document, config: &SegmenterConfig) -> Vec<Sentence> {
    segment_text(&doc.text, config)
        .into_iter()
        .map(|s| Sentence {
            doc_id: doc.doc_id.clone(),
            start: s.start,
            end: s.end,
            text: s.text,
        })
        .collect()
}

fn match_delimiter(cfg: &Compiled, chars: &[char], i: usize, line_has_content: bool) -> Option<usize> {
    for (glyph, line_start_only) in &cfg.delimiters {
        if chars[i..].starts_with(glyph) {
            if *line_start_only {
                if line_has_content {
                    continue;
                }
                let after = chars.get(i + glyph.len());
                if !after.is_none_or(|c| c.is_whitespace()) {
                    continue;
                }
            }
            return Some(glyph.len());
        }
    }
    None
}

fn breaks_at_terminal(cfg: &Compiled, chars: &[char], i: usize) -> bool {
    // Only break where whitespace or end of text follows; this absorbs runs
    // like "?!" (break after the last mark) and keeps decimals such as 37.5
    // in one piece.
    if !chars.get(i + 1).is_none_or(|c| c.is_whitespace()) {
        return false;
    }
    if chars[i] == '.' {
        if is_decimal_dot(chars, i) {
            return false;
        }
        if cfg.abbreviations.contains(&token_ending_at(chars, i)) {
            return false;
        }
    }
    // Clinical notes often continue after a mark ("stable. continue meds");
    // a lowercase continuation means the mark was not a sentence end.
    match next_non_whitespace(chars, i + 1) {
        Some(next) => !next.is_lowercase(),
        None => true,
    }
}

fn is_decimal_dot(chars: &[char], i: usize) -> bool {
    let before = i.checked_sub(1).and_then(|j| chars.get(j));
    let after = chars.get(i + 1);
    matches!((before, after), (Some(b), Some(a)) if b.is_ascii_digit() && a.is_ascii_digit())
}

/// The maximal run of alphanumeric-or-dot characters ending at `i`
/// (inclusive), lowercased. "Dr." yields "dr.", "b.d." yields "b.d.".
fn token_ending_at(chars: &[char], i: usize) -> String {
    let mut start = i;
    while start > 0 {
        let prev = chars[start - 1];
        if prev.is_alphanumeric() || prev == '.' {
            start -= 1;
        } else {
            break;
        }
    }
    chars[start..=i].iter().collect::<String>().to_lowercase()
}

fn next_non_whitespace(chars: &[char], from: usize) -> Option<char> {
    chars[from..].iter().copied().find(|c| !c.is_whitespace())
}

fn flush(segments: &mut Vec<Segment>, chars: &[char], cfg: &Compiled, start: usize, end: usize) {
    if start >= end {
        return;
    }
    let (s, e) = trim(chars, cfg, start, end);
    if e - s >= cfg.min_len {
        segments.push(Segment {
            start: s,
            end: e,
            text: chars[s..e].iter().collect(),
        });
    }
}

fn trim(chars: &[char], cfg: &Compiled, start: usize, end: usize) -> (usize, usize) {
    let mut s = start;
    let mut e = end;
    'leading: while s < e {
        if chars[s].is_whitespace() {
            s += 1;
            continue;
        }
        for (glyph, line_start_only) in &cfg.delimiters {
            if chars[s..e].starts_with(glyph) {
                let after = s + glyph.len();
                if *line_start_only && !(after >= e || chars[after].is_whitespace()) {
                    continue;
                }
                s = after;
                continue 'leading;
            }
        }
        break;
    }
    while e > s && chars[e - 1].is_whitespace() {
        e -= 1;
    }
    (s, e)
}

/// A gold annotation that does not sit inside exactly one segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentWarning {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub label: String,
    pub detail: String,
}

/// Reports annotations that overlap zero segments or span more than one.
/// Either case means sentence-level labels would mangle that annotation, so
/// callers surface these before training.
pub fn check_annotation_alignment(doc: &Document, sentences: &[Sentence]) -> Vec<AlignmentWarning> {
    let mut warnings = Vec::new();
    for ann in &doc.annotations {
        let overlapping = sentences
            .iter()
            .filter(|s| overlaps(ann, s.start, s.end))
            .count();
        if overlapping != 1 {
            warnings.push(AlignmentWarning {
                doc_id: doc.doc_id.clone(),
                start: ann.start,
                end: ann.end,
                label: ann.label.clone(),
                detail: if overlapping == 0 {
                    "annotation overlaps no segment".to_string()
                } else {
                    format!("annotation crosses {overlapping} segments")
                },
            });
        }
    }
    warnings
}

pub(crate) fn overlaps(ann: &SpanAnnotation, start: usize, end: usize) -> bool {
    ann.start < end && start < ann.end
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::char_slice;

    fn seg(text: &str) -> Vec<Segment> {
        segment_text(text, &SegmenterConfig::default())
    }

    fn texts(segments: &[Segment]) -> Vec<&str> {
        segments.iter().map(|s| s.text.as_str()).collect()
    }

    #[test]
    fn bullet_list_splits_into_items() {
        let segments = seg("Plan:\n• book OGD\n• repeat bloods");
        assert_eq!(texts(&segments), vec!["Plan:", "book OGD", "repeat bloods"]);
    }

    #[test]
    fn title_abbreviation_does_not_split() {
        let segments = seg("Seen by Dr. Smith. Discharge.");
        assert_eq!(texts(&segments), vec!["Seen by Dr. Smith.", "Discharge."]);
    }

    #[test]
    fn decimal_point_does_not_split() {
        let segments = seg("BMI 37.5 today");
        assert_eq!(texts(&segments), vec!["BMI 37.5 today"]);
    }

    #[test]
    fn lowercase_continuation_suppresses_break() {
        let segments = seg("Wound healing well. continue dressings as before.");
        assert_eq!(
            texts(&segments),
            vec!["Wound healing well. continue dressings as before."]
        );
    }

    #[test]
    fn dosing_shorthand_stays_together() {
        let segments = seg("Omeprazole 20mg o.d. Review in clinic.");
        assert_eq!(
            texts(&segments),
            vec!["Omeprazole 20mg o.d. Review in clinic."]
        );
    }

    #[test]
    fn punctuation_run_breaks_once_after_last_mark() {
        let segments = seg("Weight stable?! Continue plan.");
        assert_eq!(texts(&segments), vec!["Weight stable?!", "Continue plan."]);
    }

    #[test]
    fn dash_bullets_trimmed_only_at_line_start() {
        let segments = seg("Plan\n- repeat bloods\n- book OGD");
        assert_eq!(texts(&segments), vec!["Plan", "repeat bloods", "book OGD"]);
    }

    #[test]
    fn negative_shorthand_keeps_its_dash() {
        let segments = seg("Bloods\n-ve for H pylori");
        assert_eq!(texts(&segments), vec!["Bloods", "-ve for H pylori"]);
    }

    #[test]
    fn midline_hyphen_does_not_split() {
        let segments = seg("T2-weighted MRI reviewed - no change");
        assert_eq!(texts(&segments), vec!["T2-weighted MRI reviewed - no change"]);
    }

    #[test]
    fn offsets_slice_back_to_text() {
        let text = "Seen by Dr. Smith. Plan:\n• book OGD\n• repeat bloods. BMI 37.5 today.";
        for s in seg(text) {
            assert_eq!(char_slice(text, s.start, s.end), Some(s.text.as_str()));
        }
    }

    #[test]
    fn segments_are_ordered_and_disjoint() {
        let text = "A. B. C.\n• one\n• two";
        let segments = seg(text);
        for pair in segments.windows(2) {
            assert!(pair[0].end <= pair[1].start);
        }
    }

    #[test]
    fn unicode_text_keeps_scalar_offsets() {
        let text = "Début du plan. Réévaluer.";
        let segments = seg(text);
        assert_eq!(texts(&segments), vec!["Début du plan.", "Réévaluer."]);
        assert_eq!(segments[1].start, 15);
        assert_eq!(char_slice(text, segments[1].start, segments[1].end), Some("Réévaluer."));
    }

    #[test]
    fn empty_and_blank_inputs_yield_nothing() {
        assert!(seg("").is_empty());
        assert!(seg("  \n\n \t ").is_empty());
        assert!(seg("•\n•").is_empty());
    }

    #[test]
    fn min_segment_chars_drops_short_segments() {
        let config = SegmenterConfig {
            min_segment_chars: 3,
            ..SegmenterConfig::default()
        };
        let segments = segment_text("ok\nrepeat bloods\nno", &config);
        assert_eq!(
            segments.iter().map(|s| s.text.as_str()).collect::<Vec<_>>(),
            vec!["repeat bloods"]
        );
    }

    #[test]
    fn partial_config_file_fills_defaults() {
        let parsed: SegmenterConfig = serde_json::from_str(r#"{"min_segment_chars": 2}"#).unwrap();
        assert_eq!(parsed.min_segment_chars, 2);
        assert_eq!(parsed.terminal_punctuation, default_terminal_punctuation());
        assert!(!parsed.abbreviation_exceptions.is_empty());
    }

    #[test]
    fn config_roundtrips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seg.json");
        let config = SegmenterConfig::default();
        config.save(&path).unwrap();
        assert_eq!(SegmenterConfig::load(&path).unwrap(), config);
    }

    #[test]
    fn empty_glyph_is_rejected() {
        let config = SegmenterConfig {
            extra_delimiters: vec![DelimiterRule {
                glyph: String::new(),
                line_start_only: false,
            }],
            ..SegmenterConfig::default()
        };
        assert!(matches!(
            config.validate(),
            Err(SegmentError::EmptyDelimiterGlyph)
        ));
    }

    #[test]
    fn alignment_flags_annotation_crossing_segments() {
        let doc = Document {
            doc_id: "d".into(),
            text: "book OGD\nrepeat bloods".into(),
            annotations: vec![SpanAnnotation {
                start: 5,
                end: 15,
                label: "x".into(),
                annotator: None,
            }],
        };
        let sentences = segment_document(&doc, &SegmenterConfig::default());
        assert_eq!(sentences.len(), 2);
        let warnings = check_annotation_alignment(&doc, &sentences);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].detail.contains("crosses 2"));
    }

    #[test]
    fn alignment_accepts_annotation_inside_one_segment() {
        let doc = Document {
            doc_id: "d".into(),
            text: "Plan: book OGD today. Then bloods.".into(),
            annotations: vec![SpanAnnotation {
                start: 6,
                end: 14,
                label: "x".into(),
                annotator: None,
            }],
        };
        let sentences = segment_document(&doc, &SegmenterConfig::default());
        assert!(check_annotation_alignment(&doc, &sentences).is_empty());
    }

    #[test]
    fn alignment_flags_annotation_in_dropped_region() {
        let config = SegmenterConfig {
            min_segment_chars: 10,
            ..SegmenterConfig::default()
        };
        let doc = Document {
            doc_id: "d".into(),
            text: "ok\nrepeat bloods tomorrow".into(),
            annotations: vec![SpanAnnotation {
                start: 0,
                end: 2,
                label: "x".into(),
                annotator: None,
            }],
        };
        let sentences: Vec<Sentence> = segment_text(&doc.text, &config)
            .into_iter()
            .map(|s| Sentence {
                doc_id: doc.doc_id.clone(),
                start: s.start,
                end: s.end,
                text: s.text,
            })
            .collect();
        let warnings = check_annotation_alignment(&doc, &sentences);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].detail.contains("no segment"));
    }
}
