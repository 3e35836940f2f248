//! Replay backends that serve stored text, enabling byte-identical reruns
//! and golden-file tests.
//!
//! Predictor fixtures are plain files laid out as
//! `<fixture-root>/<run-id>/round-<k>.txt`. Baseline fixtures are a single
//! JSON object mapping question id to raw response text.

use super::{AdapterError, AnswerBackend, PredictorBackend, RoundContext};
use crate::questionbank::Question;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Reads the stored round text for (run-id, round) from a fixture tree.
pub fn scripted_replay(
    fixture_root: &Path,
    run_id: &str,
    round: u32,
) -> Result<String, AdapterError> {
    let path = fixture_root.join(run_id).join(format!("round-{round}.txt"));
    if !path.exists() {
        return Err(AdapterError::FixtureMissing {
            run_id: run_id.to_string(),
            round,
        });
    }
    std::fs::read_to_string(&path).map_err(|source| AdapterError::FixtureIo { path, source })
}

/// Writes round text into the layout `scripted_replay` reads.
pub fn write_fixture(
    fixture_root: &Path,
    run_id: &str,
    round: u32,
    text: &str,
) -> Result<(), AdapterError> {
    let dir = fixture_root.join(run_id);
    std::fs::create_dir_all(&dir).map_err(|source| AdapterError::FixtureIo {
        path: dir.clone(),
        source,
    })?;
    let path = dir.join(format!("round-{round}.txt"));
    std::fs::write(&path, text).map_err(|source| AdapterError::FixtureIo { path, source })
}

pub struct ScriptedPredictor {
    fixture_root: PathBuf,
}

impl ScriptedPredictor {
    pub fn new(fixture_root: PathBuf) -> Self {
        Self { fixture_root }
    }
}

impl PredictorBackend for ScriptedPredictor {
    fn identity(&self) -> String {
        format!("scripted:{}", self.fixture_root.display())
    }

    fn predict_round(&mut self, ctx: &RoundContext) -> Result<String, AdapterError> {
        scripted_replay(&self.fixture_root, ctx.run_id, ctx.round)
    }
}

/// Baseline replay: one JSON file of `{"<question_id>": "<raw text>"}`.
pub struct ScriptedAnswerer {
    path: PathBuf,
    responses: BTreeMap<u32, String>,
}

impl ScriptedAnswerer {
    pub fn new(path: PathBuf) -> Result<Self, AdapterError> {
        let data = std::fs::read_to_string(&path).map_err(|source| AdapterError::FixtureIo {
            path: path.clone(),
            source,
        })?;
        let raw: BTreeMap<String, String> = serde_json::from_str(&data)
            .map_err(|e| AdapterError::ResponseShape(format!("baseline fixture: {e}")))?;
        let mut responses = BTreeMap::new();
        for (k, v) in raw {
            let id: u32 = k
                .parse()
                .map_err(|_| AdapterError::ResponseShape(format!("bad question id key '{k}'")))?;
            responses.insert(id, v);
        }
        Ok(Self { path, responses })
    }
}

impl AnswerBackend for ScriptedAnswerer {
    fn identity(&self) -> String {
        format!("scripted:{}", self.path.display())
    }

    fn answer_question(&mut self, question: &Question) -> Result<String, AdapterError> {
        self.responses
            .get(&question.id)
            .cloned()
            .ok_or(AdapterError::FixtureMissing {
                run_id: self.path.display().to_string(),
                round: question.id,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_fixture_tree() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), "run-a", 1, "round one text").unwrap();
        write_fixture(dir.path(), "run-a", 2, "round two text").unwrap();
        assert_eq!(
            scripted_replay(dir.path(), "run-a", 1).unwrap(),
            "round one text"
        );
        assert_eq!(
            scripted_replay(dir.path(), "run-a", 2).unwrap(),
            "round two text"
        );
        let missing = scripted_replay(dir.path(), "run-a", 3);
        assert!(matches!(
            missing,
            Err(AdapterError::FixtureMissing { round: 3, .. })
        ));
    }
}
