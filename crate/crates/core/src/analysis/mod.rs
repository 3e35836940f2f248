//! Derived tables and test statistics over run logs: accuracy and learning
//! breakdowns, stake-bin calibration, bankroll/ROI, yes-rates, tier splits,
//! the difficulty histogram, and the two hypothesis tests.
//!
//! Everything here is a pure function of the logs. Raw (unrounded) values
//! are kept in the report; the shared half-up one-decimal rule applies only
//! at render time.

pub mod report;

use crate::market::{self, roi, StakeBin};
use crate::protocol::{Condition, RoundRecords, RunLog, RunStatus, Tier};
use crate::questionbank::BaselineAnswerSet;
use crate::stats::{self, StatsError, TestResult};
use crate::{Coins, Rational};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no predictions to analyze")]
    Empty,
    #[error("hypothesis tests need at least 2 runs per condition, got control {control} / incentive {incentive}")]
    TooFewRuns { control: usize, incentive: usize },
    #[error("bet on (question {question_id}, baseline {base_model_id}) has no outcome")]
    MissingOutcome { question_id: u32, base_model_id: u32 },
    #[error("logs mix suite fingerprints {a} and {b}; analysis must be apples-to-apples")]
    MixedSuites { a: String, b: String },
    #[error("baseline {0} has no tier label")]
    UnlabeledBaseline(u32),
    #[error("answer matrix incomplete: question {question_id} covered by {got} baselines, expected {expected}")]
    IncompleteMatrix {
        question_id: u32,
        got: usize,
        expected: usize,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Market(#[from] market::MarketError),
}

/// Per-run accuracy summary; values are percentages (0-100), unrounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAccuracy {
    pub run_id: String,
    pub predictor: String,
    pub condition: Condition,
    pub per_round: Vec<f64>,
    pub overall: f64,
    pub r4_minus_r1: f64,
}

/// Computes a run's accuracy summary from its records and outcome matrix.
pub fn run_accuracy(log: &RunLog) -> Result<RunAccuracy, AnalysisError> {
    if log.records.iter().map(RoundRecords::len).sum::<usize>() == 0 {
        return Err(AnalysisError::Empty);
    }
    let mut per_round = Vec::with_capacity(log.records.len());
    let mut total_hits = 0usize;
    let mut total_n = 0usize;
    for round in &log.records {
        let forecasts = round.forecasts();
        let mut hits = 0usize;
        for (_, qid, bid, predicted, _) in &forecasts {
            let actual = log
                .outcomes
                .get(&(*qid, *bid))
                .copied()
                .ok_or(AnalysisError::MissingOutcome {
                    question_id: *qid,
                    base_model_id: *bid,
                })?;
            if *predicted == actual {
                hits += 1;
            }
        }
        total_hits += hits;
        total_n += forecasts.len();
        per_round.push(100.0 * hits as f64 / forecasts.len() as f64);
    }
    let overall = 100.0 * total_hits as f64 / total_n as f64;
    let r4_minus_r1 = per_round.last().unwrap() - per_round.first().unwrap();
    Ok(RunAccuracy {
        run_id: log.plan.run_id.clone(),
        predictor: log.predictor_label.clone(),
        condition: log.plan.condition,
        per_round,
        overall,
        r4_minus_r1,
    })
}

/// One aggregate row: a predictor within a condition, or the all-predictor
/// mean. Unweighted means over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionAggregate {
    pub predictor: String,
    pub condition: Condition,
    pub n_runs: usize,
    pub accuracy: f64,
    pub r4_minus_r1: f64,
}

/// Round-by-condition means (percent), one row per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundConditionRow {
    pub round: u32,
    pub by_condition: BTreeMap<Condition, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTables {
    pub per_run: Vec<RunAccuracy>,
    pub aggregates: Vec<ConditionAggregate>,
    pub rounds: Vec<RoundConditionRow>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Builds the per-run, per-predictor, and round-by-condition accuracy
/// tables from run summaries.
pub fn accuracy_tables(per_run: &[RunAccuracy]) -> Result<AccuracyTables, AnalysisError> {
    if per_run.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut predictors: Vec<String> = per_run.iter().map(|r| r.predictor.clone()).collect();
    predictors.sort();
    predictors.dedup();
    let conditions = [Condition::Control, Condition::Incentive];

    let mut aggregates = Vec::new();
    for predictor in &predictors {
        for condition in conditions {
            let group: Vec<&RunAccuracy> = per_run
                .iter()
                .filter(|r| &r.predictor == predictor && r.condition == condition)
                .collect();
            if group.is_empty() {
                continue;
            }
            aggregates.push(ConditionAggregate {
                predictor: predictor.clone(),
                condition,
                n_runs: group.len(),
                accuracy: mean_of(group.iter().map(|r| r.overall)),
                r4_minus_r1: mean_of(group.iter().map(|r| r.r4_minus_r1)),
            });
        }
    }
    for condition in conditions {
        let group: Vec<&RunAccuracy> = per_run
            .iter()
            .filter(|r| r.condition == condition)
            .collect();
        if group.is_empty() {
            continue;
        }
        aggregates.push(ConditionAggregate {
            predictor: "All".to_string(),
            condition,
            n_runs: group.len(),
            accuracy: mean_of(group.iter().map(|r| r.overall)),
            r4_minus_r1: mean_of(group.iter().map(|r| r.r4_minus_r1)),
        });
    }

    let max_rounds = per_run.iter().map(|r| r.per_round.len()).max().unwrap_or(0);
    let mut rounds = Vec::new();
    for round in 0..max_rounds {
        let mut by_condition = BTreeMap::new();
        for condition in conditions {
            let vals: Vec<f64> = per_run
                .iter()
                .filter(|r| r.condition == condition && r.per_round.len() > round)
                .map(|r| r.per_round[round])
                .collect();
            if !vals.is_empty() {
                by_condition.insert(condition, vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
        rounds.push(RoundConditionRow {
            round: round as u32 + 1,
            by_condition,
        });
    }

    Ok(AccuracyTables {
        per_run: per_run.to_vec(),
        aggregates,
        rounds,
    })
}

/// The two primary tests: H1 on run-level overall accuracy and H2 on the
/// round-4 minus round-1 improvement, both control vs incentive.
pub fn hypothesis_tests(
    per_run: &[RunAccuracy],
) -> Result<(TestResult, TestResult), AnalysisError> {
    let control: Vec<&RunAccuracy> = per_run
        .iter()
        .filter(|r| r.condition == Condition::Control)
        .collect();
    let incentive: Vec<&RunAccuracy> = per_run
        .iter()
        .filter(|r| r.condition == Condition::Incentive)
        .collect();
    if control.len() < 2 || incentive.len() < 2 {
        return Err(AnalysisError::TooFewRuns {
            control: control.len(),
            incentive: incentive.len(),
        });
    }
    let overall_a: Vec<f64> = control.iter().map(|r| r.overall).collect();
    let overall_b: Vec<f64> = incentive.iter().map(|r| r.overall).collect();
    let h1 = stats::two_sample_t(&overall_a, &overall_b)?;

    let delta_a: Vec<f64> = control.iter().map(|r| r.r4_minus_r1).collect();
    let delta_b: Vec<f64> = incentive.iter().map(|r| r.r4_minus_r1).collect();
    let h2 = stats::two_sample_t(&delta_a, &delta_b)?;
    Ok((h1, h2))
}

/// OLS slope of round means, in percentage points per round (x = 1, 2, ...).
pub fn round_slope(round_means: &[f64]) -> Result<f64, AnalysisError> {
    let points: Vec<(f64, f64)> = round_means
        .iter()
        .enumerate()
        .map(|(i, y)| (i as f64 + 1.0, *y))
        .collect();
    Ok(stats::ols_slope(&points)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinStat {
    pub n_bets: u64,
    pub n_correct: u64,
}

impl BinStat {
    pub fn accuracy(&self) -> f64 {
        if self.n_bets == 0 {
            f64::NAN
        } else {
            self.n_correct as f64 / self.n_bets as f64
        }
    }
}

/// Accuracy by stake bin over every bet in the incentive logs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StakeCalibration {
    pub bins: BTreeMap<StakeBin, BinStat>,
}

impl StakeCalibration {
    pub fn total_bets(&self) -> u64 {
        self.bins.values().map(|b| b.n_bets).sum()
    }
}

/// Joins every bet to the outcome matrix and bins by stake size.
pub fn stake_calibration(logs: &[&RunLog]) -> Result<StakeCalibration, AnalysisError> {
    let mut bins: BTreeMap<StakeBin, BinStat> = StakeBin::ALL
        .iter()
        .map(|b| (*b, BinStat { n_bets: 0, n_correct: 0 }))
        .collect();
    let mut any = false;
    for log in logs {
        if log.plan.condition != Condition::Incentive {
            continue;
        }
        for round in &log.records {
            if let RoundRecords::Incentive(bets) = round {
                for bet in bets {
                    let actual = log
                        .outcomes
                        .get(&(bet.question_id, bet.base_model_id))
                        .copied()
                        .ok_or(AnalysisError::MissingOutcome {
                            question_id: bet.question_id,
                            base_model_id: bet.base_model_id,
                        })?;
                    let bin = market::stake_bin(bet.stake)?;
                    let stat = bins.get_mut(&bin).expect("all bins present");
                    stat.n_bets += 1;
                    if bet.predicted_correct == actual {
                        stat.n_correct += 1;
                    }
                    any = true;
                }
            }
        }
    }
    if !any {
        return Err(AnalysisError::Empty);
    }
    Ok(StakeCalibration { bins })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankrollRow {
    pub run_id: String,
    pub predictor: String,
    pub balance_after: Vec<Coins>,
    pub final_balance: Coins,
    pub roi: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankrollTable {
    pub rows: Vec<BankrollRow>,
    pub mean_roi: Rational,
}

/// Per-run balances after each round plus the mean ROI, all exact.
pub fn bankroll_roi_table(logs: &[&RunLog]) -> Result<BankrollTable, AnalysisError> {
    let mut rows = Vec::new();
    let mut roi_sum = Rational::from_integer(0);
    for log in logs {
        if log.plan.condition != Condition::Incentive {
            continue;
        }
        let Some(ledger) = &log.ledger else { continue };
        let balances: Vec<Coins> = ledger.round_history.iter().map(|s| s.balance_after).collect();
        let run_roi = roi(ledger)?;
        roi_sum += run_roi;
        rows.push(BankrollRow {
            run_id: log.plan.run_id.clone(),
            predictor: log.predictor_label.clone(),
            balance_after: balances,
            final_balance: ledger.balance,
            roi: run_roi,
        });
    }
    if rows.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mean_roi = roi_sum / Rational::from_integer(rows.len() as i128);
    Ok(BankrollTable { rows, mean_roi })
}

/// Per (run, baseline) percentage of Yes predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YesRateRow {
    pub run_id: String,
    pub predictor: String,
    pub condition: Condition,
    pub per_baseline: BTreeMap<u32, f64>,
    pub average: f64,
}

pub fn yes_rate_table(logs: &[&RunLog]) -> Vec<YesRateRow> {
    let mut rows = Vec::new();
    for log in logs {
        let mut yes: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
        for round in &log.records {
            for (_, _qid, bid, predicted, _) in round.forecasts() {
                let e = yes.entry(bid).or_insert((0, 0));
                e.1 += 1;
                if predicted {
                    e.0 += 1;
                }
            }
        }
        if yes.is_empty() {
            continue;
        }
        let per_baseline: BTreeMap<u32, f64> = yes
            .iter()
            .map(|(bid, (y, n))| (*bid, 100.0 * *y as f64 / *n as f64))
            .collect();
        let average = per_baseline.values().sum::<f64>() / per_baseline.len() as f64;
        rows.push(YesRateRow {
            run_id: log.plan.run_id.clone(),
            predictor: log.predictor_label.clone(),
            condition: log.plan.condition,
            per_baseline,
            average,
        });
    }
    rows
}

/// Accuracy over predictions targeting each tier, by condition (percent),
/// plus the incentive-minus-control difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierAccuracyRow {
    pub tier: Tier,
    pub by_condition: BTreeMap<Condition, f64>,
    pub difference_pp: Option<f64>,
}

pub fn tier_accuracy(
    logs: &[&RunLog],
    tiers: &BTreeMap<u32, Tier>,
) -> Result<Vec<TierAccuracyRow>, AnalysisError> {
    let mut counts: BTreeMap<(Tier, Condition), (u64, u64)> = BTreeMap::new();
    for log in logs {
        for round in &log.records {
            for (_, qid, bid, predicted, _) in round.forecasts() {
                let tier = tiers
                    .get(&bid)
                    .copied()
                    .ok_or(AnalysisError::UnlabeledBaseline(bid))?;
                let actual = log
                    .outcomes
                    .get(&(qid, bid))
                    .copied()
                    .ok_or(AnalysisError::MissingOutcome {
                        question_id: qid,
                        base_model_id: bid,
                    })?;
                let e = counts.entry((tier, log.plan.condition)).or_insert((0, 0));
                e.1 += 1;
                if predicted == actual {
                    e.0 += 1;
                }
            }
        }
    }
    let mut rows = Vec::new();
    for tier in [Tier::Current, Tier::Prior] {
        let mut by_condition = BTreeMap::new();
        for condition in [Condition::Control, Condition::Incentive] {
            if let Some((hits, total)) = counts.get(&(tier, condition)) {
                by_condition.insert(condition, 100.0 * *hits as f64 / *total as f64);
            }
        }
        if by_condition.is_empty() {
            continue;
        }
        let difference_pp = match (
            by_condition.get(&Condition::Control),
            by_condition.get(&Condition::Incentive),
        ) {
            (Some(c), Some(i)) => Some(i - c),
            _ => None,
        };
        rows.push(TierAccuracyRow {
            tier,
            by_condition,
            difference_pp,
        });
    }
    Ok(rows)
}

/// Counts questions solved by exactly k of the baselines, k = 0..=n.
pub fn difficulty_histogram(answers: &BaselineAnswerSet) -> Result<Vec<u32>, AnalysisError> {
    let baselines = answers.baseline_ids();
    let n = baselines.len();
    if n == 0 {
        return Err(AnalysisError::Empty);
    }
    let mut per_question: BTreeMap<u32, usize> = BTreeMap::new();
    let mut solved: BTreeMap<u32, usize> = BTreeMap::new();
    for g in &answers.graded {
        *per_question.entry(g.question_id).or_insert(0) += 1;
        if g.correct {
            *solved.entry(g.question_id).or_insert(0) += 1;
        }
    }
    let mut histogram = vec![0u32; n + 1];
    for (qid, got) in &per_question {
        if *got != n {
            return Err(AnalysisError::IncompleteMatrix {
                question_id: *qid,
                got: *got,
                expected: n,
            });
        }
        histogram[solved.get(qid).copied().unwrap_or(0)] += 1;
    }
    Ok(histogram)
}

/// Everything the analyze command emits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tables: AccuracyTables,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1_overall: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h2_learning: Option<TestResult>,
    pub round_slopes: BTreeMap<Condition, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stake_calibration: Option<StakeCalibration>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bankroll: Option<BankrollTable>,
    pub yes_rates: Vec<YesRateRow>,
    pub tier_accuracy: Vec<TierAccuracyRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difficulty_histogram: Option<Vec<u32>>,
    pub notes: Vec<String>,
}

/// Full analysis over completed run logs (plus the baseline answer set for
/// the difficulty histogram, when available).
pub fn analyze_logs(
    logs: &[RunLog],
    answers: Option<&BaselineAnswerSet>,
    include_incomplete: bool,
) -> Result<AnalysisReport, AnalysisError> {
    let mut notes = Vec::new();
    let usable: Vec<&RunLog> = logs
        .iter()
        .filter(|l| {
            if l.status == RunStatus::Completed || include_incomplete {
                true
            } else {
                notes.push(format!(
                    "run {} excluded: status {:?}",
                    l.plan.run_id, l.status
                ));
                false
            }
        })
        .collect();
    if usable.is_empty() {
        return Err(AnalysisError::Empty);
    }

    // apples-to-apples guard
    let first_fp = &usable[0].suite_fingerprint;
    for log in &usable {
        if &log.suite_fingerprint != first_fp {
            return Err(AnalysisError::MixedSuites {
                a: first_fp.clone(),
                b: log.suite_fingerprint.clone(),
            });
        }
    }

    let per_run: Vec<RunAccuracy> = usable
        .iter()
        .map(|l| run_accuracy(l))
        .collect::<Result<_, _>>()?;
    let tables = accuracy_tables(&per_run)?;

    let (h1, h2) = match hypothesis_tests(&per_run) {
        Ok((h1, h2)) => (Some(h1), Some(h2)),
        Err(AnalysisError::TooFewRuns { control, incentive }) => {
            notes.push(format!(
                "hypothesis tests skipped: control {control} runs, incentive {incentive} runs"
            ));
            (None, None)
        }
        Err(e) => return Err(e),
    };

    let mut round_slopes = BTreeMap::new();
    for condition in [Condition::Control, Condition::Incentive] {
        let means: Vec<f64> = tables
            .rounds
            .iter()
            .filter_map(|r| r.by_condition.get(&condition).copied())
            .collect();
        if means.len() >= 2 {
            round_slopes.insert(condition, round_slope(&means)?);
        }
    }

    let stake_cal = match stake_calibration(&usable) {
        Ok(c) => Some(c),
        Err(AnalysisError::Empty) => {
            notes.push("no incentive bets: stake calibration omitted".to_string());
            None
        }
        Err(e) => return Err(e),
    };
    let bankroll = match bankroll_roi_table(&usable) {
        Ok(t) => Some(t),
        Err(AnalysisError::Empty) => {
            notes.push("no incentive ledgers: bankroll table omitted".to_string());
            None
        }
        Err(e) => return Err(e),
    };

    let yes_rates = yes_rate_table(&usable);

    let tiers: BTreeMap<u32, Tier> = usable
        .iter()
        .flat_map(|l| l.plan.roster.iter().map(|d| (d.base_model_id, d.tier)))
        .collect();
    let tier_rows = tier_accuracy(&usable, &tiers)?;

    let difficulty = match answers {
        Some(set) => Some(difficulty_histogram(set)?),
        None => None,
    };

    Ok(AnalysisReport {
        tables,
        h1_overall: h1,
        h2_learning: h2,
        round_slopes,
        stake_calibration: stake_cal,
        bankroll,
        yes_rates,
        tier_accuracy: tier_rows,
        difficulty_histogram: difficulty,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::questionbank::GradedAnswer;

    fn acc(
        run: &str,
        predictor: &str,
        condition: Condition,
        rounds: [f64; 4],
        overall: f64,
        delta: f64,
    ) -> RunAccuracy {
        RunAccuracy {
            run_id: run.into(),
            predictor: predictor.into(),
            condition,
            per_round: rounds.to_vec(),
            overall,
            r4_minus_r1: delta,
        }
    }

    #[test]
    fn aggregates_are_unweighted_means() {
        let runs = vec![
            acc("a-1", "a", Condition::Control, [70.0, 70.0, 70.0, 70.0], 70.0, 0.0),
            acc("a-2", "a", Condition::Control, [80.0, 80.0, 80.0, 80.0], 80.0, 0.0),
            acc("b-1", "b", Condition::Control, [90.0, 90.0, 90.0, 90.0], 90.0, 0.0),
        ];
        let tables = accuracy_tables(&runs).unwrap();
        let all = tables
            .aggregates
            .iter()
            .find(|a| a.predictor == "All" && a.condition == Condition::Control)
            .unwrap();
        assert!((all.accuracy - 80.0).abs() < 1e-12);
        assert_eq!(all.n_runs, 3);
        let a_only = tables
            .aggregates
            .iter()
            .find(|a| a.predictor == "a")
            .unwrap();
        assert!((a_only.accuracy - 75.0).abs() < 1e-12);
    }

    #[test]
    fn slope_of_table_round_means() {
        let incentive = [75.3, 79.1, 84.4, 87.2];
        let control = [79.4, 74.7, 80.0, 82.3];
        assert!((round_slope(&incentive).unwrap() - 4.10).abs() < 1e-9);
        assert!((round_slope(&control).unwrap() - 1.40).abs() < 1e-9);
        assert_eq!(round_slope(&[50.0, 50.0, 50.0]).unwrap(), 0.0);
    }

    #[test]
    fn difficulty_histogram_hand_count() {
        // two questions: one solved by 3 of 3 baselines, one by 0
        let mut graded = Vec::new();
        for bid in 1..=3 {
            graded.push(GradedAnswer {
                question_id: 1,
                base_model_id: bid,
                raw_text: String::new(),
                parsed: None,
                correct: true,
            });
            graded.push(GradedAnswer {
                question_id: 2,
                base_model_id: bid,
                raw_text: String::new(),
                parsed: None,
                correct: false,
            });
        }
        let set = BaselineAnswerSet::new(graded);
        let hist = difficulty_histogram(&set).unwrap();
        assert_eq!(hist, vec![1, 0, 0, 1]);
        assert_eq!(hist.iter().sum::<u32>(), 2);
    }

    #[test]
    fn difficulty_histogram_rejects_incomplete_matrix() {
        let graded = vec![
            GradedAnswer {
                question_id: 1,
                base_model_id: 1,
                raw_text: String::new(),
                parsed: None,
                correct: true,
            },
            GradedAnswer {
                question_id: 1,
                base_model_id: 2,
                raw_text: String::new(),
                parsed: None,
                correct: true,
            },
            GradedAnswer {
                question_id: 2,
                base_model_id: 1,
                raw_text: String::new(),
                parsed: None,
                correct: false,
            },
        ];
        let set = BaselineAnswerSet::new(graded);
        assert!(matches!(
            difficulty_histogram(&set),
            Err(AnalysisError::IncompleteMatrix { question_id: 2, .. })
        ));
    }

    #[test]
    fn paper_shape_histogram_sums_to_suite_size() {
        // consistency fixture: the published distribution shape
        let counts = [0u32, 0, 2, 11, 46, 30, 11];
        assert_eq!(counts.iter().sum::<u32>(), 100);
    }

    #[test]
    fn yes_rate_alternating_is_50() {
        use crate::market::Ledger;
        use crate::protocol::{PredictionRecord, RunPlan};
        let records: Vec<PredictionRecord> = (0..100)
            .map(|i| PredictionRecord {
                round: 1,
                question_id: i + 1,
                base_model_id: 1,
                predicted_correct: i % 2 == 0,
                rationale: String::new(),
            })
            .collect();
        let outcomes: BTreeMap<(u32, u32), bool> =
            (1..=100).map(|q| ((q, 1), true)).collect();
        let log = RunLog {
            plan: RunPlan {
                run_id: "alt".into(),
                condition: Condition::Control,
                rounds: 1,
                questions_per_round: 100,
                question_order: (1..=100).collect(),
                roster: vec![],
                shuffle_seed: 0,
            },
            predictor_label: "alt".into(),
            backend_identity: String::new(),
            template_version: String::new(),
            suite_fingerprint: String::new(),
            status: RunStatus::Completed,
            abort_reason: None,
            prompts: vec![],
            records: vec![RoundRecords::Control(records)],
            feedback: vec![],
            ledger: None::<Ledger>,
            outcomes,
            started_at_unix: None,
            finished_at_unix: None,
        };
        let rows = yes_rate_table(&[&log]);
        assert_eq!(rows.len(), 1);
        assert!((rows[0].per_baseline[&1] - 50.0).abs() < 1e-12);
        assert!((rows[0].average - 50.0).abs() < 1e-12);

        // single-tier roster: the absent tier produces no row
        let tiers = BTreeMap::from([(1u32, Tier::Current)]);
        let tier_rows = tier_accuracy(&[&log], &tiers).unwrap();
        assert_eq!(tier_rows.len(), 1);
        assert_eq!(tier_rows[0].tier, Tier::Current);
        assert!(tier_rows[0].difference_pp.is_none(), "one condition only");

        // unlabeled baseline is a config error
        let empty = BTreeMap::new();
        assert!(matches!(
            tier_accuracy(&[&log], &empty),
            Err(AnalysisError::UnlabeledBaseline(1))
        ));
    }

    #[test]
    fn all_baselines_correct_masses_at_top_bucket() {
        let graded: Vec<GradedAnswer> = (1..=10)
            .flat_map(|q| {
                (1..=6).map(move |b| GradedAnswer {
                    question_id: q,
                    base_model_id: b,
                    raw_text: String::new(),
                    parsed: None,
                    correct: true,
                })
            })
            .collect();
        let hist = difficulty_histogram(&BaselineAnswerSet::new(graded)).unwrap();
        assert_eq!(hist, vec![0, 0, 0, 0, 0, 0, 10]);
    }

    #[test]
    fn too_few_runs_for_tests() {
        let runs = vec![
            acc("a-1", "a", Condition::Control, [70.0; 4], 70.0, 0.0),
            acc("b-1", "b", Condition::Incentive, [80.0; 4], 80.0, 0.0),
        ];
        assert!(matches!(
            hypothesis_tests(&runs),
            Err(AnalysisError::TooFewRuns { control: 1, incentive: 1 })
        ));
    }
}
