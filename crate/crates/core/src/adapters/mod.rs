//! Pluggable predictor and baseline backends, plus the record parser.
//!
//! Three kinds: live HTTP chat endpoints, scripted replay from fixture
//! files, and a synthetic calibrated bettor for fully offline experiments.

pub mod http;
pub mod parse;
pub mod scripted;
pub mod synthetic;

pub use http::{chat_complete, RetryPolicy};
pub use parse::{parse_records, render_records, ParseErrorKind, ParseIssue, ParseReport, ParsedRecord};
pub use scripted::scripted_replay;
pub use synthetic::{StakeRule, SyntheticBettor, SyntheticParams};

use crate::protocol::Condition;
use crate::questionbank::Question;
use crate::Coins;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("backend unavailable after {attempts} attempts: {last_error}")]
    BackendUnavailable { attempts: u32, last_error: String },
    #[error("backend returned status {status}: {excerpt}")]
    BackendError { status: u16, excerpt: String },
    #[error("unexpected response shape: {0}")]
    ResponseShape(String),
    #[error("fixture has no entry for run '{run_id}' round {round}")]
    FixtureMissing { run_id: String, round: u32 },
    #[error("fixture io at {path}: {source}")]
    FixtureIo {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("backend spec invalid: {0}")]
    InvalidSpec(String),
    #[error("auth environment variable {0} is not set")]
    MissingAuth(String),
}

/// What drives a backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    HttpChat,
    Scripted,
    Synthetic,
}

/// Declarative backend description; which optional fields are required
/// depends on `kind`. Secrets are referenced by environment variable name
/// only and never serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env_var: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticParams>,
    /// Baseline-side synthetic answer rate in [0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_rate: Option<f64>,
}

impl BackendSpec {
    pub fn synthetic_predictor(params: SyntheticParams) -> Self {
        Self {
            kind: BackendKind::Synthetic,
            endpoint_url: None,
            model_name: None,
            auth_env_var: None,
            temperature: None,
            max_output_tokens: None,
            timeout_secs: None,
            fixture_path: None,
            synthetic: Some(params),
            answer_rate: None,
        }
    }

    pub fn synthetic_baseline(rate: f64, seed: u64) -> Self {
        Self {
            kind: BackendKind::Synthetic,
            endpoint_url: None,
            model_name: None,
            auth_env_var: None,
            temperature: None,
            max_output_tokens: None,
            timeout_secs: None,
            fixture_path: None,
            synthetic: Some(SyntheticParams {
                seed,
                ..SyntheticParams::default()
            }),
            answer_rate: Some(rate),
        }
    }

    pub fn validate_for_predictor(&self) -> Result<(), AdapterError> {
        match self.kind {
            BackendKind::HttpChat => {
                if self.endpoint_url.is_none() || self.model_name.is_none() {
                    return Err(AdapterError::InvalidSpec(
                        "http-chat predictor needs endpoint_url and model_name".into(),
                    ));
                }
            }
            BackendKind::Scripted => {
                if self.fixture_path.is_none() {
                    return Err(AdapterError::InvalidSpec(
                        "scripted predictor needs fixture_path".into(),
                    ));
                }
            }
            BackendKind::Synthetic => {
                if self.answer_rate.is_some() {
                    return Err(AdapterError::InvalidSpec(
                        "answer_rate marks a baseline spec, not a predictor".into(),
                    ));
                }
                match &self.synthetic {
                    Some(p) => p.validate().map_err(AdapterError::InvalidSpec)?,
                    None => {
                        return Err(AdapterError::InvalidSpec(
                            "synthetic predictor needs synthetic params".into(),
                        ))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn validate_for_baseline(&self) -> Result<(), AdapterError> {
        match self.kind {
            BackendKind::HttpChat => {
                if self.endpoint_url.is_none() || self.model_name.is_none() {
                    return Err(AdapterError::InvalidSpec(
                        "http-chat baseline needs endpoint_url and model_name".into(),
                    ));
                }
            }
            BackendKind::Scripted => {
                if self.fixture_path.is_none() {
                    return Err(AdapterError::InvalidSpec(
                        "scripted baseline needs fixture_path".into(),
                    ));
                }
            }
            BackendKind::Synthetic => match self.answer_rate {
                Some(r) if (0.0..=1.0).contains(&r) => {}
                Some(r) => {
                    return Err(AdapterError::InvalidSpec(format!(
                        "answer_rate {r} outside [0, 1]"
                    )))
                }
                None => {
                    return Err(AdapterError::InvalidSpec(
                        "synthetic baseline needs answer_rate".into(),
                    ))
                }
            },
        }
        Ok(())
    }

    /// Builds a predictor backend; `stream_seed` decorrelates repetitions
    /// that share one spec.
    pub fn build_predictor(
        &self,
        stream_seed: u64,
    ) -> Result<Box<dyn PredictorBackend>, AdapterError> {
        self.validate_for_predictor()?;
        Ok(match self.kind {
            BackendKind::HttpChat => Box::new(http::HttpChatPredictor::new(self.clone())),
            BackendKind::Scripted => Box::new(scripted::ScriptedPredictor::new(
                self.fixture_path.clone().expect("validated"),
            )),
            BackendKind::Synthetic => {
                let mut params = self.synthetic.clone().expect("validated");
                params.seed ^= stream_seed;
                Box::new(SyntheticBettor::new(params))
            }
        })
    }

    pub fn build_answerer(
        &self,
        stream_seed: u64,
    ) -> Result<Box<dyn AnswerBackend>, AdapterError> {
        self.validate_for_baseline()?;
        Ok(match self.kind {
            BackendKind::HttpChat => Box::new(http::HttpChatAnswerer::new(self.clone())),
            BackendKind::Scripted => Box::new(scripted::ScriptedAnswerer::new(
                self.fixture_path.clone().expect("validated"),
            )?),
            BackendKind::Synthetic => {
                let seed = self.synthetic.as_ref().map(|p| p.seed).unwrap_or(0) ^ stream_seed;
                Box::new(synthetic::SyntheticAnswerer::new(
                    self.answer_rate.expect("validated"),
                    seed,
                ))
            }
        })
    }

    /// Human-readable identity for manifests; never includes secrets.
    pub fn identity(&self) -> String {
        match self.kind {
            BackendKind::HttpChat => format!(
                "http-chat:{}",
                self.model_name.as_deref().unwrap_or("unnamed")
            ),
            BackendKind::Scripted => format!(
                "scripted:{}",
                self.fixture_path
                    .as_deref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default()
            ),
            BackendKind::Synthetic => match (&self.synthetic, self.answer_rate) {
                (_, Some(rate)) => format!("synthetic-baseline(rate={rate})"),
                (Some(p), None) => format!(
                    "synthetic(a={}, noise={}, gamma={}, lambda={}, rule={:?})",
                    p.acuity, p.noise_scale, p.stake_exponent, p.learning_weight, p.stake_rule
                ),
                (None, None) => "synthetic".into(),
            },
        }
    }
}

/// One (question, baseline) pair in a round batch. The true outcome bit is
/// visible to the synthetic simulator only; live and scripted backends see
/// just the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundItem {
    pub question_id: u32,
    pub base_model_id: u32,
    pub truth: bool,
}

/// Everything a predictor backend may draw on for one round.
pub struct RoundContext<'a> {
    pub run_id: &'a str,
    pub round: u32,
    pub condition: Condition,
    pub prompt: &'a str,
    pub items: &'a [RoundItem],
    pub balance: Option<Coins>,
    pub expected_records: usize,
}

/// Actual outcomes for a settled round, fed back to stateful backends.
pub struct RoundFeedback<'a> {
    pub round: u32,
    /// (question_id, base_model_id, baseline answered correctly)
    pub outcomes: &'a [(u32, u32, bool)],
}

/// A forecaster: turns a round context into raw record text.
pub trait PredictorBackend: Send {
    fn identity(&self) -> String;
    fn predict_round(&mut self, ctx: &RoundContext) -> Result<String, AdapterError>;
    /// Called after each settled round; default is to ignore feedback.
    fn observe_feedback(&mut self, _feedback: &RoundFeedback) {}
}

/// An answerer: produces raw response text for one question.
pub trait AnswerBackend: Send {
    fn identity(&self) -> String;
    fn answer_question(&mut self, question: &Question) -> Result<String, AdapterError>;
}
