//! Question suite generation, exact answer oracles, and baseline grading.
//!
//! A suite is a pure function of (seed, count, category mix): every question
//! carries the params its answer is recomputed from, and the rendered text is
//! deterministic given those params.

mod generate;
mod grade;
pub mod oracle;

pub use generate::{generate_suite, CategoryMix};
pub use grade::{canonical_answer_text, grade};
pub use oracle::{base_convert, gcd_lcm, is_prime, modpow, oracle_answer};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuestionError {
    #[error("modulus must be nonzero")]
    ZeroModulus,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid digit '{digit}' for radix {radix}")]
    InvalidDigit { digit: char, radix: u32 },
    #[error("radix {0} outside 2..=16")]
    InvalidRadix(u32),
    #[error("empty digit string")]
    EmptyDigits,
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("bad params for {category:?}: {detail}")]
    BadParams { category: Category, detail: String },
    #[error("generation failed for {category:?}: {detail}")]
    Generation { category: Category, detail: String },
    #[error("category mix sums to {got}, expected {expected}")]
    MixMismatch { got: u32, expected: u32 },
    #[error("suite io: {0}")]
    Io(#[from] std::io::Error),
    #[error("suite decode: {0}")]
    Decode(#[from] serde_json::Error),
}

/// Question families. Serialized names are the on-disk category identifiers.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    ArithmeticEval,
    ModularPow,
    BaseConversion,
    Divisibility,
    Primality,
    GcdLcm,
    LinearEquation,
    PerfectSquare,
    Determinant,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::ArithmeticEval,
        Category::ModularPow,
        Category::BaseConversion,
        Category::Divisibility,
        Category::Primality,
        Category::GcdLcm,
        Category::LinearEquation,
        Category::PerfectSquare,
        Category::Determinant,
    ];
}

/// A question's exact answer: an integer or a Yes/No bit, never both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Answer {
    Integer(i128),
    YesNo(bool),
}

/// One generated item. `answer` is recomputable from `params` via
/// [`oracle_answer`]; `text` is a deterministic rendering of `params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: u32,
    pub category: Category,
    pub text: String,
    pub answer: Answer,
    pub params: Vec<i64>,
    pub seed: u64,
}

/// A baseline's graded response to one question. `correct` implies `parsed`
/// is present and equals the question's answer under normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedAnswer {
    pub question_id: u32,
    pub base_model_id: u32,
    pub raw_text: String,
    #[serde(skip)]
    pub parsed: Option<Answer>,
    pub correct: bool,
}

/// The full (baseline x question) correctness matrix for one suite.
#[derive(Debug, Clone, Default)]
pub struct BaselineAnswerSet {
    pub graded: Vec<GradedAnswer>,
}

impl BaselineAnswerSet {
    pub fn new(graded: Vec<GradedAnswer>) -> Self {
        Self { graded }
    }

    /// Looks up whether a (question, baseline) pair was answered correctly.
    pub fn outcome(&self, question_id: u32, base_model_id: u32) -> Option<bool> {
        self.graded
            .iter()
            .find(|g| g.question_id == question_id && g.base_model_id == base_model_id)
            .map(|g| g.correct)
    }

    /// Correctness keyed by (question_id, base_model_id).
    pub fn outcome_matrix(&self) -> BTreeMap<(u32, u32), bool> {
        self.graded
            .iter()
            .map(|g| ((g.question_id, g.base_model_id), g.correct))
            .collect()
    }

    /// Per-baseline (correct, total) counts, ordered by baseline id.
    pub fn per_baseline_counts(&self) -> BTreeMap<u32, (u32, u32)> {
        let mut out: BTreeMap<u32, (u32, u32)> = BTreeMap::new();
        for g in &self.graded {
            let e = out.entry(g.base_model_id).or_insert((0, 0));
            e.1 += 1;
            if g.correct {
                e.0 += 1;
            }
        }
        out
    }

    pub fn baseline_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.graded.iter().map(|g| g.base_model_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

fn save_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), QuestionError> {
    let tmp = path.with_extension("tmp");
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes a suite as a top-level JSON array with stable key order.
pub fn save_suite(path: &Path, suite: &[Question]) -> Result<(), QuestionError> {
    save_json_atomic(path, &suite)
}

pub fn load_suite(path: &Path) -> Result<Vec<Question>, QuestionError> {
    let data = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&data)?)
}

pub fn save_answers(path: &Path, answers: &[GradedAnswer]) -> Result<(), QuestionError> {
    save_json_atomic(path, &answers)
}

pub fn load_answers(path: &Path) -> Result<Vec<GradedAnswer>, QuestionError> {
    let data = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&data)?)
}

/// 64-bit FNV-1a over the canonical suite serialization; used to guard
/// against mixing logs from different suites in one analysis.
pub fn suite_fingerprint(suite: &[Question]) -> String {
    let bytes = serde_json::to_vec(suite).expect("suite serializes");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_serialization_shape() {
        let a = serde_json::to_value(Answer::Integer(42)).unwrap();
        assert_eq!(a, serde_json::json!({"kind": "integer", "value": 42}));
        let b = serde_json::to_value(Answer::YesNo(true)).unwrap();
        assert_eq!(b, serde_json::json!({"kind": "yes-no", "value": true}));
        let big = Answer::Integer(i128::from(u64::MAX) * 3);
        let round: Answer =
            serde_json::from_str(&serde_json::to_string(&big).unwrap()).unwrap();
        assert_eq!(round, big);
    }

    #[test]
    fn category_names_are_kebab_case() {
        assert_eq!(
            serde_json::to_value(Category::ArithmeticEval).unwrap(),
            serde_json::json!("arithmetic-eval")
        );
        assert_eq!(
            serde_json::to_value(Category::GcdLcm).unwrap(),
            serde_json::json!("gcd-lcm")
        );
        assert_eq!(
            serde_json::to_value(Category::PerfectSquare).unwrap(),
            serde_json::json!("perfect-square")
        );
    }

    #[test]
    fn graded_answer_file_shape() {
        let g = GradedAnswer {
            question_id: 3,
            base_model_id: 2,
            raw_text: "{\"answer\": 7}".into(),
            parsed: Some(Answer::Integer(7)),
            correct: true,
        };
        // the on-disk form streams fields in declaration order and
        // omits the in-memory parse
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(
            text,
            r#"{"question_id":3,"base_model_id":2,"raw_text":"{\"answer\": 7}","correct":true}"#
        );
    }
}
