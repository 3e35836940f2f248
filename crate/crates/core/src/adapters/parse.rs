//! Strict parser from raw predictor text to validated forecast records.
//!
//! Accepts a JSON array or one JSON object per line, with or without code
//! fences. Field names tolerate the two schema spellings in the wild
//! (`predicted_correct` and `correct_answer`); output always normalizes to
//! `predicted_correct`. The parser never fails: every input line lands in
//! either `records` or `errors`.

use crate::protocol::Condition;
use crate::Coins;
use serde_json::{Map, Value};
use std::collections::HashSet;

pub const YES_VALUES: [&str; 3] = ["Yes", "Y", "yes"];
pub const NO_VALUES: [&str; 3] = ["No", "N", "no"];

/// Rationales longer than this many words get flagged (never rejected).
pub const RATIONALE_WORD_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseErrorKind {
    BadStructure,
    MissingField,
    BadValue,
    OutOfRange,
    DuplicateKey,
    WrongCount,
}

/// One classified problem; `line` is 1-based (0 means the text as a whole).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ParseIssue {
    pub line: usize,
    pub kind: ParseErrorKind,
    pub detail: String,
}

/// A normalized forecast record; `stake` is present iff the text was parsed
/// under the incentive condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedRecord {
    pub round: u32,
    pub question_id: u32,
    pub base_model_id: u32,
    pub predicted_correct: bool,
    pub stake: Option<Coins>,
    pub rationale: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub records: Vec<ParsedRecord>,
    pub errors: Vec<ParseIssue>,
    /// Lines whose rationale exceeded the word cap (kept, just flagged).
    pub rationale_overlength: Vec<usize>,
}

impl ParseReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Parses predictor output into records, collecting a classified error for
/// everything invalid. Checks per-record structure, value vocabulary, stake
/// integrality and range, duplicate (question, baseline) keys, and finally
/// the total record count against `expected_count`.
pub fn parse_records(
    text: &str,
    condition: Condition,
    expected_count: usize,
    stake_cap: Coins,
) -> ParseReport {
    let mut report = ParseReport::default();
    let mut seen_keys: HashSet<(u32, u32)> = HashSet::new();

    let cleaned = strip_code_fences(text);
    let trimmed = cleaned.trim();

    // whole-text forms first: an array, or a single object
    if let Ok(value) = serde_json::from_str::<Value>(trimmed) {
        match value {
            Value::Array(items) => {
                for (i, item) in items.into_iter().enumerate() {
                    ingest_value(item, i + 1, condition, stake_cap, &mut seen_keys, &mut report);
                }
                finish(&mut report, expected_count);
                return report;
            }
            obj @ Value::Object(_) => {
                ingest_value(obj, 1, condition, stake_cap, &mut seen_keys, &mut report);
                finish(&mut report, expected_count);
                return report;
            }
            _ => {
                report.errors.push(ParseIssue {
                    line: 1,
                    kind: ParseErrorKind::BadStructure,
                    detail: "top-level JSON is neither an array nor an object".into(),
                });
                finish(&mut report, expected_count);
                return report;
            }
        }
    }

    // concatenated-values mode: handles pretty-printed objects spanning
    // lines; only taken when the whole text streams cleanly
    if let Some(values) = parse_value_stream(trimmed) {
        for (line_no, value) in values {
            ingest_value(value, line_no, condition, stake_cap, &mut seen_keys, &mut report);
        }
        finish(&mut report, expected_count);
        return report;
    }

    // line mode: one JSON object per non-empty line, precise per-line errors
    for (idx, line) in cleaned.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim().trim_end_matches(',');
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(line) {
            Ok(value) => {
                ingest_value(value, line_no, condition, stake_cap, &mut seen_keys, &mut report)
            }
            Err(e) => report.errors.push(ParseIssue {
                line: line_no,
                kind: ParseErrorKind::BadStructure,
                detail: format!("not a JSON object: {e}"),
            }),
        }
    }
    finish(&mut report, expected_count);
    report
}

/// Streams concatenated JSON values (JSONL or pretty-printed objects back
/// to back). Returns None unless the entire text parses, so malformed input
/// falls through to line mode for better error positions.
fn parse_value_stream(text: &str) -> Option<Vec<(usize, Value)>> {
    let mut stream = serde_json::Deserializer::from_str(text).into_iter::<Value>();
    let mut values = Vec::new();
    loop {
        let offset = stream.byte_offset();
        match stream.next() {
            Some(Ok(value)) => {
                // the value starts after any whitespace left from the
                // previous one
                let rest = &text[offset.min(text.len())..];
                let skip = rest.len() - rest.trim_start().len();
                let start = offset + skip;
                let line_no = text[..start.min(text.len())].matches('\n').count() + 1;
                values.push((line_no, value));
            }
            Some(Err(_)) => return None,
            None => break,
        }
    }
    if values.len() > 1 {
        Some(values)
    } else {
        None
    }
}

fn finish(report: &mut ParseReport, expected_count: usize) {
    if report.records.len() != expected_count {
        report.errors.push(ParseIssue {
            line: 0,
            kind: ParseErrorKind::WrongCount,
            detail: format!(
                "expected {expected_count} records, parsed {}",
                report.records.len()
            ),
        });
    }
}

fn strip_code_fences(text: &str) -> String {
    if !text.contains("```") {
        return text.to_string();
    }
    text.lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn ingest_value(
    value: Value,
    line: usize,
    condition: Condition,
    stake_cap: Coins,
    seen: &mut HashSet<(u32, u32)>,
    report: &mut ParseReport,
) {
    let obj = match value {
        Value::Object(map) => map,
        other => {
            report.errors.push(ParseIssue {
                line,
                kind: ParseErrorKind::BadStructure,
                detail: format!("expected an object, got {}", type_name(&other)),
            });
            return;
        }
    };
    match record_from_object(&obj, line, condition, stake_cap) {
        Ok(record) => {
            if !seen.insert((record.question_id, record.base_model_id)) {
                report.errors.push(ParseIssue {
                    line,
                    kind: ParseErrorKind::DuplicateKey,
                    detail: format!(
                        "duplicate (question {}, baseline {})",
                        record.question_id, record.base_model_id
                    ),
                });
                return;
            }
            if word_count(&record.rationale) > RATIONALE_WORD_CAP {
                report.rationale_overlength.push(line);
            }
            report.records.push(record);
        }
        Err(issue) => report.errors.push(issue),
    }
}

fn record_from_object(
    obj: &Map<String, Value>,
    line: usize,
    condition: Condition,
    stake_cap: Coins,
) -> Result<ParsedRecord, ParseIssue> {
    let round = required_u32(obj, "round", line)?;
    let question_id = required_u32(obj, "question_id", line)?;
    let base_model_id = required_u32(obj, "base_model_id", line)?;

    // the prediction field has two accepted spellings
    let prediction_value = obj
        .get("predicted_correct")
        .or_else(|| obj.get("correct_answer"))
        .ok_or_else(|| ParseIssue {
            line,
            kind: ParseErrorKind::MissingField,
            detail: "missing predicted_correct / correct_answer".into(),
        })?;
    let predicted_correct = parse_prediction(prediction_value).ok_or_else(|| ParseIssue {
        line,
        kind: ParseErrorKind::BadValue,
        detail: format!(
            "prediction must be one of {YES_VALUES:?} or {NO_VALUES:?}, got {prediction_value}"
        ),
    })?;

    let rationale = match obj.get("rationale") {
        Some(Value::String(s)) => s.clone(),
        Some(other) => {
            return Err(ParseIssue {
                line,
                kind: ParseErrorKind::BadValue,
                detail: format!("rationale must be a string, got {}", type_name(other)),
            })
        }
        None => {
            return Err(ParseIssue {
                line,
                kind: ParseErrorKind::MissingField,
                detail: "missing rationale".into(),
            })
        }
    };

    let stake = match condition {
        Condition::Control => None,
        Condition::Incentive => {
            let stake_value = obj.get("stake").ok_or_else(|| ParseIssue {
                line,
                kind: ParseErrorKind::MissingField,
                detail: "missing stake".into(),
            })?;
            Some(parse_stake(stake_value, stake_cap, line)?)
        }
    };

    Ok(ParsedRecord {
        round,
        question_id,
        base_model_id,
        predicted_correct,
        stake,
        rationale,
    })
}

fn parse_prediction(value: &Value) -> Option<bool> {
    let s = value.as_str()?;
    if YES_VALUES.contains(&s) {
        Some(true)
    } else if NO_VALUES.contains(&s) {
        Some(false)
    } else {
        None
    }
}

/// Stakes must be plain JSON integers: decimals, strings (and with them
/// thousands separators), and booleans are all rejected.
fn parse_stake(value: &Value, cap: Coins, line: usize) -> Result<Coins, ParseIssue> {
    let n = match value {
        Value::Number(n) => n,
        other => {
            return Err(ParseIssue {
                line,
                kind: ParseErrorKind::BadValue,
                detail: format!("stake must be an integer, got {}", type_name(other)),
            })
        }
    };
    if n.as_i64().is_none() && n.as_u64().is_none() {
        return Err(ParseIssue {
            line,
            kind: ParseErrorKind::BadValue,
            detail: format!("stake must be an integer, got {n}"),
        });
    }
    if let Some(u) = n.as_u64() {
        if u >= 1 && u <= cap {
            return Ok(u);
        }
    }
    Err(ParseIssue {
        line,
        kind: ParseErrorKind::OutOfRange,
        detail: format!("stake {n} outside 1..={cap}"),
    })
}

fn required_u32(obj: &Map<String, Value>, field: &str, line: usize) -> Result<u32, ParseIssue> {
    let value = obj.get(field).ok_or_else(|| ParseIssue {
        line,
        kind: ParseErrorKind::MissingField,
        detail: format!("missing {field}"),
    })?;
    value
        .as_u64()
        .and_then(|v| u32::try_from(v).ok())
        .ok_or_else(|| ParseIssue {
            line,
            kind: ParseErrorKind::BadValue,
            detail: format!("{field} must be a nonnegative integer, got {value}"),
        })
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Renders records in the canonical log-line format, one JSON object per
/// line. Inverse of [`parse_records`] for valid records.
pub fn render_records(records: &[ParsedRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&render_record(r));
        out.push('\n');
    }
    out
}

pub fn render_record(r: &ParsedRecord) -> String {
    let yes_no = if r.predicted_correct { "Yes" } else { "No" };
    match r.stake {
        Some(stake) => format!(
            "{{\"round\": {}, \"question_id\": {}, \"base_model_id\": {}, \"predicted_correct\": \"{}\", \"stake\": {}, \"rationale\": {}}}",
            r.round,
            r.question_id,
            r.base_model_id,
            yes_no,
            stake,
            serde_json::to_string(&r.rationale).expect("string serializes"),
        ),
        None => format!(
            "{{\"round\": {}, \"question_id\": {}, \"base_model_id\": {}, \"predicted_correct\": \"{}\", \"rationale\": {}}}",
            r.round,
            r.question_id,
            r.base_model_id,
            yes_no,
            serde_json::to_string(&r.rationale).expect("string serializes"),
        ),
    }
}
