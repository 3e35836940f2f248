//! Grading baseline responses against the exact answers.

use super::{Answer, GradedAnswer, Question};
use serde_json::Value;

/// Canonical response text for an answer, the format baselines are asked
/// to produce.
pub fn canonical_answer_text(answer: &Answer) -> String {
    match answer {
        Answer::Integer(v) => format!("{{\"answer\": {v}}}"),
        Answer::YesNo(true) => "{\"answer\": \"Yes\"}".to_string(),
        Answer::YesNo(false) => "{\"answer\": \"No\"}".to_string(),
    }
}

/// Grades raw model output against the question's answer.
///
/// The answer is pulled from the first JSON object in the text that carries
/// an `answer` field, tolerating surrounding prose and code fences. Integers
/// accept an optional sign and comma thousands separators; Yes/No matching is
/// case-insensitive with surrounding whitespace ignored. Anything that fails
/// to parse is simply wrong.
pub fn grade(q: &Question, base_model_id: u32, raw_text: &str) -> GradedAnswer {
    let parsed = extract_answer(raw_text).and_then(|v| normalize(&v, &q.answer));
    let correct = parsed.as_ref() == Some(&q.answer);
    GradedAnswer {
        question_id: q.id,
        base_model_id,
        raw_text: raw_text.to_string(),
        parsed,
        correct,
    }
}

/// Finds the first embedded JSON object with an `answer` key.
fn extract_answer(raw: &str) -> Option<Value> {
    for (idx, _) in raw.char_indices().filter(|(_, c)| *c == '{') {
        let mut stream = serde_json::Deserializer::from_str(&raw[idx..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            if let Some(answer) = map.get("answer") {
                return Some(answer.clone());
            }
        }
    }
    None
}

/// Normalizes a raw answer value against the expected answer shape.
fn normalize(value: &Value, expected: &Answer) -> Option<Answer> {
    match expected {
        Answer::Integer(_) => parse_integer(value).map(Answer::Integer),
        Answer::YesNo(_) => parse_yes_no(value).map(Answer::YesNo),
    }
}

fn parse_integer(value: &Value) -> Option<i128> {
    match value {
        // floats and out-of-range numbers are not integers
        Value::Number(n) => n.as_i128(),
        Value::String(s) => {
            let s = s.trim();
            let (sign, digits) = match s.strip_prefix('-') {
                Some(rest) => (-1i128, rest),
                None => (1i128, s.strip_prefix('+').unwrap_or(s)),
            };
            if digits.is_empty() {
                return None;
            }
            // commas allowed as thousands separators, decimals rejected
            let mut cleaned = String::with_capacity(digits.len());
            for c in digits.chars() {
                match c {
                    '0'..='9' => cleaned.push(c),
                    ',' => {}
                    _ => return None,
                }
            }
            cleaned.parse::<i128>().ok().map(|v| sign * v)
        }
        _ => None,
    }
}

fn parse_yes_no(value: &Value) -> Option<bool> {
    match value {
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "yes" => Some(true),
            "no" => Some(false),
            _ => None,
        },
        _ => None,
    }
}
