//! Run-log persistence.
//!
//! Layout per run: `<root>/<run-id>/manifest` holds the plan, condition,
//! seeds, backend identity, status, prompts, feedback, ledger, and outcome
//! matrix; `<root>/<run-id>/round-<k>.log` holds one structured record per
//! line. Control lines carry `{round, question_id, base_model_id,
//! predicted_correct, rationale}`; incentive lines add `stake`. Yes/No is
//! stored as the strings "Yes"/"No" and mapped to booleans in memory.
//!
//! Writes go through a temp file and rename, and a `.in-progress` marker
//! sits in the directory until the run finishes.

use super::{
    Condition, MaskedDescription, PredictionRecord, ProtocolError, RoundRecords, RunLog, RunPlan,
    RunStatus,
};
use crate::adapters::parse::{render_record, ParsedRecord};
use crate::market::{BetRecord, Ledger};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest";
pub const IN_PROGRESS_MARKER: &str = ".in-progress";

#[derive(Debug, Serialize, Deserialize)]
struct OutcomeEntry {
    question_id: u32,
    base_model_id: u32,
    correct: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    run_id: String,
    predictor_label: String,
    condition: Condition,
    status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    abort_reason: Option<String>,
    backend_identity: String,
    template_version: String,
    suite_fingerprint: String,
    shuffle_seed: u64,
    rounds: u32,
    questions_per_round: u32,
    question_order: Vec<u32>,
    roster: Vec<MaskedDescription>,
    prompts: Vec<String>,
    feedback: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ledger: Option<Ledger>,
    outcomes: Vec<OutcomeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    started_at_unix: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    finished_at_unix: Option<u64>,
}

impl Manifest {
    fn from_log(log: &RunLog) -> Self {
        Self {
            run_id: log.plan.run_id.clone(),
            predictor_label: log.predictor_label.clone(),
            condition: log.plan.condition,
            status: log.status,
            abort_reason: log.abort_reason.clone(),
            backend_identity: log.backend_identity.clone(),
            template_version: log.template_version.clone(),
            suite_fingerprint: log.suite_fingerprint.clone(),
            shuffle_seed: log.plan.shuffle_seed,
            rounds: log.plan.rounds,
            questions_per_round: log.plan.questions_per_round,
            question_order: log.plan.question_order.clone(),
            roster: log.plan.roster.clone(),
            prompts: log.prompts.clone(),
            feedback: log.feedback.clone(),
            ledger: log.ledger.clone(),
            outcomes: log
                .outcomes
                .iter()
                .map(|((q, b), c)| OutcomeEntry {
                    question_id: *q,
                    base_model_id: *b,
                    correct: *c,
                })
                .collect(),
            started_at_unix: log.started_at_unix,
            finished_at_unix: log.finished_at_unix,
        }
    }
}

/// Control-condition wire line; unknown fields (a stray stake, say) are a
/// load error so condition isolation is enforced on disk too.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlLine {
    round: u32,
    question_id: u32,
    base_model_id: u32,
    predicted_correct: String,
    rationale: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IncentiveLine {
    round: u32,
    question_id: u32,
    base_model_id: u32,
    predicted_correct: String,
    stake: u64,
    rationale: String,
}

fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn run_dir(root: &Path, run_id: &str) -> PathBuf {
    root.join(run_id)
}

/// Creates the run directory with an in-progress marker and the initial
/// manifest.
pub fn begin_persist(root: &Path, log: &RunLog) -> Result<(), ProtocolError> {
    let dir = run_dir(root, &log.plan.run_id);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join(IN_PROGRESS_MARKER), b"")?;
    write_manifest(&dir, log)?;
    Ok(())
}

/// Persists one settled round's records and refreshes the manifest.
pub fn persist_round(root: &Path, log: &RunLog, round: u32) -> Result<(), ProtocolError> {
    let dir = run_dir(root, &log.plan.run_id);
    let records = &log.records[round as usize - 1];
    atomic_write(
        &dir.join(format!("round-{round}.log")),
        round_log_text(records).as_bytes(),
    )?;
    write_manifest(&dir, log)?;
    Ok(())
}

/// Final manifest write; removes the in-progress marker.
pub fn finish_persist(root: &Path, log: &RunLog) -> Result<(), ProtocolError> {
    let dir = run_dir(root, &log.plan.run_id);
    write_manifest(&dir, log)?;
    let marker = dir.join(IN_PROGRESS_MARKER);
    if marker.exists() {
        std::fs::remove_file(marker)?;
    }
    Ok(())
}

/// Writes a complete run log in one call (manifest plus round logs).
pub fn save_run_log(root: &Path, log: &RunLog) -> Result<(), ProtocolError> {
    begin_persist(root, log)?;
    for round in 1..=log.records.len() as u32 {
        persist_round(root, log, round)?;
    }
    finish_persist(root, log)
}

fn write_manifest(dir: &Path, log: &RunLog) -> Result<(), ProtocolError> {
    let manifest = Manifest::from_log(log);
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    atomic_write(&dir.join(MANIFEST_FILE), &bytes)?;
    Ok(())
}

/// Renders one round's records as log lines, via the same renderer the
/// parser round-trips.
pub fn round_log_text(records: &RoundRecords) -> String {
    let mut out = String::new();
    match records {
        RoundRecords::Control(rows) => {
            for r in rows {
                out.push_str(&render_record(&ParsedRecord {
                    round: r.round,
                    question_id: r.question_id,
                    base_model_id: r.base_model_id,
                    predicted_correct: r.predicted_correct,
                    stake: None,
                    rationale: r.rationale.clone(),
                }));
                out.push('\n');
            }
        }
        RoundRecords::Incentive(rows) => {
            for r in rows {
                out.push_str(&render_record(&ParsedRecord {
                    round: r.round,
                    question_id: r.question_id,
                    base_model_id: r.base_model_id,
                    predicted_correct: r.predicted_correct,
                    stake: Some(r.stake),
                    rationale: r.rationale.clone(),
                }));
                out.push('\n');
            }
        }
    }
    out
}

fn yes_no_to_bool(s: &str, path: &Path) -> Result<bool, ProtocolError> {
    match s {
        "Yes" => Ok(true),
        "No" => Ok(false),
        other => Err(ProtocolError::MalformedLog {
            path: path.display().to_string(),
            detail: format!("predicted_correct must be \"Yes\" or \"No\", got {other:?}"),
        }),
    }
}

/// Whether a run directory still carries the in-progress marker.
pub fn is_in_progress(dir: &Path) -> bool {
    dir.join(IN_PROGRESS_MARKER).exists()
}

/// Loads a persisted run back into memory. Round logs are read for as many
/// consecutive rounds as exist, so aborted runs load with their settled
/// prefix.
pub fn load_run_log(dir: &Path) -> Result<RunLog, ProtocolError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;

    let mut records = Vec::new();
    for round in 1..=manifest.rounds {
        let path = dir.join(format!("round-{round}.log"));
        if !path.exists() {
            break;
        }
        let text = std::fs::read_to_string(&path)?;
        records.push(parse_round_log(&text, manifest.condition, &path)?);
    }

    let outcomes: BTreeMap<(u32, u32), bool> = manifest
        .outcomes
        .iter()
        .map(|e| ((e.question_id, e.base_model_id), e.correct))
        .collect();

    Ok(RunLog {
        plan: RunPlan {
            run_id: manifest.run_id,
            condition: manifest.condition,
            rounds: manifest.rounds,
            questions_per_round: manifest.questions_per_round,
            question_order: manifest.question_order,
            roster: manifest.roster,
            shuffle_seed: manifest.shuffle_seed,
        },
        predictor_label: manifest.predictor_label,
        backend_identity: manifest.backend_identity,
        template_version: manifest.template_version,
        suite_fingerprint: manifest.suite_fingerprint,
        status: manifest.status,
        abort_reason: manifest.abort_reason,
        prompts: manifest.prompts,
        records,
        feedback: manifest.feedback,
        ledger: manifest.ledger,
        outcomes,
        started_at_unix: manifest.started_at_unix,
        finished_at_unix: manifest.finished_at_unix,
    })
}

fn parse_round_log(
    text: &str,
    condition: Condition,
    path: &Path,
) -> Result<RoundRecords, ProtocolError> {
    match condition {
        Condition::Control => {
            let mut rows = Vec::new();
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let wire: ControlLine =
                    serde_json::from_str(line).map_err(|e| ProtocolError::MalformedLog {
                        path: path.display().to_string(),
                        detail: e.to_string(),
                    })?;
                rows.push(PredictionRecord {
                    round: wire.round,
                    question_id: wire.question_id,
                    base_model_id: wire.base_model_id,
                    predicted_correct: yes_no_to_bool(&wire.predicted_correct, path)?,
                    rationale: wire.rationale,
                });
            }
            Ok(RoundRecords::Control(rows))
        }
        Condition::Incentive => {
            let mut rows = Vec::new();
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let wire: IncentiveLine =
                    serde_json::from_str(line).map_err(|e| ProtocolError::MalformedLog {
                        path: path.display().to_string(),
                        detail: e.to_string(),
                    })?;
                rows.push(BetRecord {
                    round: wire.round,
                    question_id: wire.question_id,
                    base_model_id: wire.base_model_id,
                    predicted_correct: yes_no_to_bool(&wire.predicted_correct, path)?,
                    stake: wire.stake,
                    rationale: wire.rationale,
                });
            }
            Ok(RoundRecords::Incentive(rows))
        }
    }
}

/// Lists run directories under a root (anything holding a manifest).
pub fn discover_runs(root: &Path) -> Result<Vec<PathBuf>, ProtocolError> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(root)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() && path.join(MANIFEST_FILE).exists() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}
