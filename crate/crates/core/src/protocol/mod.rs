//! Experiment orchestration: run planning, baseline answer collection, the
//! round loop with inter-round feedback, and run-log persistence.

pub mod prompt;
pub mod runlog;

pub use prompt::{feedback_summary, format_coins, render_prompt, PromptConstants, PromptState, PROMPT_TEMPLATE_VERSION};
pub use runlog::{load_run_log, save_run_log};

use crate::adapters::{AnswerBackend, PredictorBackend, RoundContext, RoundFeedback, RoundItem};
use crate::market::{
    self, BetRecord, Ledger, LedgerStatus, MarketError, RoundSettlement, ViolationPolicy,
};
use crate::questionbank::{self, BaselineAnswerSet, GradedAnswer, Question};
use crate::rng::SplitMix64;
use crate::Coins;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("suite size {suite} does not equal rounds {rounds} x questions-per-round {questions_per_round}")]
    BadShape {
        suite: usize,
        rounds: u32,
        questions_per_round: u32,
    },
    #[error("the standard protocol uses a roster of 6 baselines, got {0}; set allow_nonstandard_roster to override")]
    RosterSize(usize),
    #[error("roster entry {0} has an empty description")]
    EmptyRosterText(u32),
    #[error("duplicate baseline id {0} in roster")]
    DuplicateRosterId(u32),
    #[error("plan references question {0} which is not in the suite")]
    UnknownQuestion(u32),
    #[error("no outcome available for question {question_id} baseline {base_model_id}")]
    MissingOutcome { question_id: u32, base_model_id: u32 },
    #[error("round {round} rendered before results of round {missing} were available")]
    Sequencing { round: u32, missing: u32 },
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("run log io: {0}")]
    Io(#[from] std::io::Error),
    #[error("run log decode: {0}")]
    Decode(#[from] serde_json::Error),
    #[error("run log at {path} is malformed: {detail}")]
    MalformedLog { path: String, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Control,
    Incentive,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Control => "control",
            Condition::Incentive => "incentive",
        }
    }
}

/// Generation tier of a baseline; fixed at plan time and immutable, even
/// when a baseline's measured strength disagrees with its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Current,
    Prior,
}

/// Capability blurb shown to predictors in place of a model name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedDescription {
    pub base_model_id: u32,
    pub text: String,
    pub tier: Tier,
}

/// Fixed schedule for one run: the shuffled question order, round shape,
/// and masked roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub run_id: String,
    pub condition: Condition,
    pub rounds: u32,
    pub questions_per_round: u32,
    pub question_order: Vec<u32>,
    pub roster: Vec<MaskedDescription>,
    pub shuffle_seed: u64,
}

impl RunPlan {
    /// Question ids shown in `round` (1-based), in plan order.
    pub fn round_question_ids(&self, round: u32) -> Vec<u32> {
        let per = self.questions_per_round as usize;
        let start = (round as usize - 1) * per;
        self.question_order[start..start + per].to_vec()
    }

    /// The (question, baseline) pairs of a round, question-major.
    pub fn round_pairs(&self, round: u32) -> Vec<(u32, u32)> {
        let mut pairs = Vec::with_capacity(self.questions_per_round as usize * self.roster.len());
        for qid in self.round_question_ids(round) {
            for desc in &self.roster {
                pairs.push((qid, desc.base_model_id));
            }
        }
        pairs
    }

    pub fn records_per_round(&self) -> usize {
        self.questions_per_round as usize * self.roster.len()
    }
}

/// Inputs to [`plan_run`] that are not the suite or roster.
#[derive(Debug, Clone)]
pub struct PlanSpec {
    pub run_id: String,
    pub condition: Condition,
    pub rounds: u32,
    pub questions_per_round: u32,
    pub shuffle_seed: u64,
    pub allow_nonstandard_roster: bool,
}

impl PlanSpec {
    pub fn standard(run_id: impl Into<String>, condition: Condition, shuffle_seed: u64) -> Self {
        Self {
            run_id: run_id.into(),
            condition,
            rounds: 4,
            questions_per_round: 25,
            shuffle_seed,
            allow_nonstandard_roster: false,
        }
    }
}

/// A control-condition forecast (no stake).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub round: u32,
    pub question_id: u32,
    pub base_model_id: u32,
    pub predicted_correct: bool,
    pub rationale: String,
}

/// One round's records; the variant carries the condition invariant
/// (control records have no stakes, incentive records all do).
#[derive(Debug, Clone, PartialEq)]
pub enum RoundRecords {
    Control(Vec<PredictionRecord>),
    Incentive(Vec<BetRecord>),
}

impl RoundRecords {
    pub fn len(&self) -> usize {
        match self {
            RoundRecords::Control(v) => v.len(),
            RoundRecords::Incentive(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Uniform view for analysis: (round, question, baseline, predicted, stake).
    pub fn forecasts(&self) -> Vec<(u32, u32, u32, bool, Option<Coins>)> {
        match self {
            RoundRecords::Control(v) => v
                .iter()
                .map(|r| (r.round, r.question_id, r.base_model_id, r.predicted_correct, None))
                .collect(),
            RoundRecords::Incentive(v) => v
                .iter()
                .map(|r| {
                    (
                        r.round,
                        r.question_id,
                        r.base_model_id,
                        r.predicted_correct,
                        Some(r.stake),
                    )
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Aborted,
    Bankrupt,
}

/// Actual outcomes of one settled/graded round plus the predictor's score.
#[derive(Debug, Clone)]
pub struct RoundResults {
    pub round: u32,
    pub outcomes: Vec<(u32, u32, bool)>,
    pub predictor_hits: usize,
}

/// Full transcript of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub plan: RunPlan,
    pub predictor_label: String,
    pub backend_identity: String,
    pub template_version: String,
    pub suite_fingerprint: String,
    pub status: RunStatus,
    pub abort_reason: Option<String>,
    pub prompts: Vec<String>,
    pub records: Vec<RoundRecords>,
    pub feedback: Vec<String>,
    pub ledger: Option<Ledger>,
    pub outcomes: BTreeMap<(u32, u32), bool>,
    pub started_at_unix: Option<u64>,
    pub finished_at_unix: Option<u64>,
}

impl RunLog {
    /// Total forecasts across settled rounds.
    pub fn total_records(&self) -> usize {
        self.records.iter().map(RoundRecords::len).sum()
    }
}

/// Builds the deterministic schedule for one run: a Fisher-Yates shuffle of
/// the suite's question ids from the shuffle seed, blocked into rounds.
pub fn plan_run(
    suite: &[Question],
    roster: &[MaskedDescription],
    spec: &PlanSpec,
) -> Result<RunPlan, ProtocolError> {
    let expected = spec.rounds as usize * spec.questions_per_round as usize;
    if suite.len() != expected {
        return Err(ProtocolError::BadShape {
            suite: suite.len(),
            rounds: spec.rounds,
            questions_per_round: spec.questions_per_round,
        });
    }
    if roster.len() != 6 && !spec.allow_nonstandard_roster {
        return Err(ProtocolError::RosterSize(roster.len()));
    }
    let mut seen = BTreeSet::new();
    for desc in roster {
        if desc.text.trim().is_empty() {
            return Err(ProtocolError::EmptyRosterText(desc.base_model_id));
        }
        if !seen.insert(desc.base_model_id) {
            return Err(ProtocolError::DuplicateRosterId(desc.base_model_id));
        }
    }

    let mut order: Vec<u32> = suite.iter().map(|q| q.id).collect();
    let mut rng = SplitMix64::new(spec.shuffle_seed).derive("plan-shuffle");
    rng.shuffle(&mut order);

    Ok(RunPlan {
        run_id: spec.run_id.clone(),
        condition: spec.condition,
        rounds: spec.rounds,
        questions_per_round: spec.questions_per_round,
        question_order: order,
        roster: roster.to_vec(),
        shuffle_seed: spec.shuffle_seed,
    })
}

/// Collects and grades every (baseline, question) answer. Baselines get no
/// inter-round feedback. A backend that stays broken after its own retries
/// is graded wrong for that question, with the failure annotated in the raw
/// text.
pub fn collect_baseline_answers(
    suite: &[Question],
    backends: &mut [(u32, Box<dyn AnswerBackend>)],
) -> BaselineAnswerSet {
    let mut graded = Vec::with_capacity(suite.len() * backends.len());
    for (base_model_id, backend) in backends.iter_mut() {
        for question in suite {
            match backend.answer_question(question) {
                Ok(raw) => graded.push(questionbank::grade(question, *base_model_id, &raw)),
                Err(e) => {
                    log::warn!(
                        "baseline {base_model_id} failed on question {}: {e}; grading as wrong",
                        question.id
                    );
                    graded.push(GradedAnswer {
                        question_id: question.id,
                        base_model_id: *base_model_id,
                        raw_text: format!("[backend failure: {e}]"),
                        parsed: None,
                        correct: false,
                    });
                }
            }
        }
    }
    BaselineAnswerSet::new(graded)
}

/// Knobs for the run loop.
#[derive(Debug, Clone)]
pub struct RunPolicies {
    pub violation_policy: ViolationPolicy,
    /// Corrective retries per round after an unusable reply, before the run
    /// aborts.
    pub retry_budget: u32,
    pub per_bet_cap: Coins,
    pub initial_bankroll: Coins,
    pub record_timestamps: bool,
}

impl Default for RunPolicies {
    fn default() -> Self {
        Self {
            violation_policy: ViolationPolicy::Flag,
            retry_budget: 2,
            per_bet_cap: market::DEFAULT_STAKE_CAP,
            initial_bankroll: market::DEFAULT_BANKROLL,
            record_timestamps: true,
        }
    }
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Runs the full round loop against one predictor backend.
///
/// Each round: render the prompt, query the backend, parse and validate the
/// records, (incentive) validate stakes and settle the ledger, then emit
/// feedback. An unusable reply is retried with a corrective reminder up to
/// the retry budget, after which the run aborts with whatever rounds already
/// settled. Bankruptcy ends the run with status recorded. When `out_dir` is
/// given the log is persisted incrementally so partial runs are inspectable.
pub fn execute_run(
    plan: &RunPlan,
    suite: &[Question],
    answers: &BaselineAnswerSet,
    backend: &mut dyn PredictorBackend,
    predictor_label: &str,
    policies: &RunPolicies,
    out_dir: Option<&Path>,
) -> Result<RunLog, ProtocolError> {
    let questions: BTreeMap<u32, &Question> = suite.iter().map(|q| (q.id, q)).collect();
    for qid in &plan.question_order {
        if !questions.contains_key(qid) {
            return Err(ProtocolError::UnknownQuestion(*qid));
        }
    }
    let outcomes = answers.outcome_matrix();
    for round in 1..=plan.rounds {
        for (qid, bid) in plan.round_pairs(round) {
            if !outcomes.contains_key(&(qid, bid)) {
                return Err(ProtocolError::MissingOutcome {
                    question_id: qid,
                    base_model_id: bid,
                });
            }
        }
    }

    let constants = PromptConstants {
        initial_bankroll: policies.initial_bankroll,
        per_bet_cap: policies.per_bet_cap,
    };
    let mut ledger = match plan.condition {
        Condition::Incentive => Some(Ledger::new(policies.initial_bankroll)),
        Condition::Control => None,
    };
    let mut log = RunLog {
        plan: plan.clone(),
        predictor_label: predictor_label.to_string(),
        backend_identity: backend.identity(),
        template_version: PROMPT_TEMPLATE_VERSION.to_string(),
        suite_fingerprint: questionbank::suite_fingerprint(suite),
        status: RunStatus::Completed,
        abort_reason: None,
        prompts: Vec::new(),
        records: Vec::new(),
        feedback: Vec::new(),
        ledger: None,
        outcomes: outcomes.clone(),
        started_at_unix: policies.record_timestamps.then(now_unix),
        finished_at_unix: None,
    };
    if let Some(dir) = out_dir {
        runlog::begin_persist(dir, &log)?;
    }

    'rounds: for round in 1..=plan.rounds {
        let round_pairs = plan.round_pairs(round);
        let items: Vec<RoundItem> = round_pairs
            .iter()
            .map(|(qid, bid)| RoundItem {
                question_id: *qid,
                base_model_id: *bid,
                truth: outcomes[&(*qid, *bid)],
            })
            .collect();
        let state = PromptState {
            prior_feedback: log.feedback.clone(),
            bankroll: ledger.as_ref().map(|l| l.balance),
        };
        let base_prompt = render_prompt(plan, round, &state, &constants, &questions)?;
        log.prompts.push(base_prompt.clone());

        let mut attempt_prompt = base_prompt.clone();
        let mut settled = false;
        for attempt in 0..=policies.retry_budget {
            let ctx = RoundContext {
                run_id: &plan.run_id,
                round,
                condition: plan.condition,
                prompt: &attempt_prompt,
                items: &items,
                balance: ledger.as_ref().map(|l| l.balance),
                expected_records: items.len(),
            };
            let reply = match backend.predict_round(&ctx) {
                Ok(text) => text,
                Err(e) => {
                    log.status = RunStatus::Aborted;
                    log.abort_reason = Some(format!("round {round}: backend failed: {e}"));
                    break 'rounds;
                }
            };

            match usable_records(&reply, plan, round, &round_pairs, policies, ledger.as_ref()) {
                Ok(parsed) => {
                    let results =
                        apply_round(&mut log, &mut ledger, plan, round, parsed, &outcomes)?;
                    let settlement = ledger
                        .as_ref()
                        .and_then(|l| l.round_history.last())
                        .cloned();
                    let feedback =
                        feedback_summary(&results, plan.condition, settlement.as_ref());
                    log.feedback.push(feedback);
                    backend.observe_feedback(&RoundFeedback {
                        round,
                        outcomes: &results.outcomes,
                    });
                    settled = true;
                    if let Some(dir) = out_dir {
                        runlog::persist_round(dir, &log, round)?;
                    }
                    if matches!(
                        ledger.as_ref().map(|l| l.status),
                        Some(LedgerStatus::Bankrupt)
                    ) {
                        log.status = RunStatus::Bankrupt;
                        break 'rounds;
                    }
                    break;
                }
                Err(problem) => {
                    if attempt == policies.retry_budget {
                        log.status = RunStatus::Aborted;
                        log.abort_reason = Some(format!(
                            "round {round}: reply unusable after {} attempts: {problem}",
                            policies.retry_budget + 1
                        ));
                        break 'rounds;
                    }
                    attempt_prompt = format!(
                        "{base_prompt}\nYour previous reply could not be used: {problem}. \
                         Reply again with exactly {} records, one JSON object per line, \
                         covering every (question, model) pair exactly once.\n",
                        items.len()
                    );
                }
            }
        }
        if !settled && log.status == RunStatus::Completed {
            // defensive: the loop above always settles or aborts
            log.status = RunStatus::Aborted;
            log.abort_reason = Some(format!("round {round}: no usable reply"));
            break;
        }
    }

    if log.status == RunStatus::Completed {
        if let Some(l) = ledger.as_mut() {
            l.complete();
        }
    }
    log.ledger = ledger;
    log.finished_at_unix = policies.record_timestamps.then(now_unix);
    if let Some(dir) = out_dir {
        runlog::finish_persist(dir, &log)?;
    }
    Ok(log)
}

/// Validated records for one round: control predictions, or incentive bets
/// already passed through stake validation.
enum ValidatedRound {
    Control(Vec<PredictionRecord>),
    Incentive {
        accepted: Vec<BetRecord>,
        flags: Vec<crate::market::ViolationFlag>,
    },
}

/// Parses a reply, checks it covers this round's pairs exactly, and runs
/// stake validation. Returns a human-readable problem description on
/// failure, which becomes the corrective reminder; under the reject policy
/// a stake violation is a content problem like any other.
fn usable_records(
    reply: &str,
    plan: &RunPlan,
    round: u32,
    round_pairs: &[(u32, u32)],
    policies: &RunPolicies,
    ledger: Option<&Ledger>,
) -> Result<ValidatedRound, String> {
    let report = crate::adapters::parse_records(
        reply,
        plan.condition,
        round_pairs.len(),
        policies.per_bet_cap,
    );
    if !report.errors.is_empty() {
        let first = &report.errors[0];
        return Err(format!(
            "{} error(s); first: line {} {:?}: {}",
            report.errors.len(),
            first.line,
            first.kind,
            first.detail
        ));
    }
    let expected: BTreeSet<(u32, u32)> = round_pairs.iter().copied().collect();
    let mut got = BTreeSet::new();
    for r in &report.records {
        if r.round != round {
            return Err(format!(
                "record for question {} carries round {}, expected {round}",
                r.question_id, r.round
            ));
        }
        if !expected.contains(&(r.question_id, r.base_model_id)) {
            return Err(format!(
                "record for (question {}, model {}) is not in this round",
                r.question_id, r.base_model_id
            ));
        }
        got.insert((r.question_id, r.base_model_id));
    }
    if got.len() != expected.len() {
        return Err(format!(
            "round covers {} of {} required pairs",
            got.len(),
            expected.len()
        ));
    }
    if !report.rationale_overlength.is_empty() {
        log::warn!(
            "run {} round {round}: {} rationale(s) over the word cap (kept)",
            plan.run_id,
            report.rationale_overlength.len()
        );
    }

    match plan.condition {
        Condition::Control => Ok(ValidatedRound::Control(
            report
                .records
                .into_iter()
                .map(|r| PredictionRecord {
                    round: r.round,
                    question_id: r.question_id,
                    base_model_id: r.base_model_id,
                    predicted_correct: r.predicted_correct,
                    rationale: r.rationale,
                })
                .collect(),
        )),
        Condition::Incentive => {
            let bets: Vec<BetRecord> = report
                .records
                .into_iter()
                .map(|r| BetRecord {
                    round: r.round,
                    question_id: r.question_id,
                    base_model_id: r.base_model_id,
                    predicted_correct: r.predicted_correct,
                    stake: r.stake.expect("incentive records always carry stakes"),
                    rationale: r.rationale,
                })
                .collect();
            let balance = ledger.map(|l| l.balance).unwrap_or(policies.initial_bankroll);
            match market::validate_round(&bets, balance, policies.per_bet_cap, policies.violation_policy)
            {
                Ok((accepted, flags)) => Ok(ValidatedRound::Incentive { accepted, flags }),
                Err(e) => Err(format!("stakes violate constraints: {e}")),
            }
        }
    }
}

/// Settles validated records against the outcome matrix and appends them to
/// the log.
fn apply_round(
    log: &mut RunLog,
    ledger: &mut Option<Ledger>,
    plan: &RunPlan,
    round: u32,
    validated: ValidatedRound,
    outcomes: &BTreeMap<(u32, u32), bool>,
) -> Result<RoundResults, ProtocolError> {
    let actuals: Vec<(u32, u32, bool)> = plan
        .round_pairs(round)
        .iter()
        .map(|(q, b)| (*q, *b, outcomes[&(*q, *b)]))
        .collect();

    match validated {
        ValidatedRound::Control(records) => {
            let hits = records
                .iter()
                .filter(|r| outcomes[&(r.question_id, r.base_model_id)] == r.predicted_correct)
                .count();
            log.records.push(RoundRecords::Control(records));
            Ok(RoundResults {
                round,
                outcomes: actuals,
                predictor_hits: hits,
            })
        }
        ValidatedRound::Incentive { accepted, flags } => {
            let l = ledger.as_mut().expect("incentive runs own a ledger");
            l.violations.extend(flags);
            let settlement: RoundSettlement = market::settle_round(l, &accepted, outcomes)?;
            let hits = settlement.wins as usize;
            log.records.push(RoundRecords::Incentive(accepted));
            Ok(RoundResults {
                round,
                outcomes: actuals,
                predictor_hits: hits,
            })
        }
    }
}
