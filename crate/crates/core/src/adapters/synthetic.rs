//! Synthetic calibrated bettor and rate-based baseline answerer.
//!
//! The bettor models a forecaster with a noisy private signal about each
//! item and a learned per-baseline prior. For item truth y in {0, 1}:
//!
//! ```text
//! b0 = logistic(acuity * (2y - 1) + eps),  eps ~ Normal(0, noise_scale)
//! p  = posterior mean of the baseline's observed correctness (Beta, uniform prior)
//! b  = lambda * p + (1 - lambda) * b0
//! ```
//!
//! It predicts Yes iff b >= 0.5 and sizes stakes from the confidence
//! |2b - 1|, so stake magnitude carries the same information that drives
//! accuracy. With lambda > 0 the Beta posteriors sharpen on round feedback,
//! which is where round-over-round improvement comes from.

use super::{AdapterError, AnswerBackend, PredictorBackend, RoundContext, RoundFeedback};
use crate::market::STAKE_MIN;
use crate::protocol::Condition;
use crate::questionbank::{canonical_answer_text, Answer, Question};
use crate::rng::SplitMix64;
use crate::Coins;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How the bettor maps confidence to a stake.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StakeRule {
    /// stake = 1 + floor((cap - 1) * |2b - 1|^gamma), then the whole round
    /// is scaled proportionally to fit the bankroll.
    PowerMap,
    /// stake = clamp(floor(balance * |2b - 1| / n_items), 1, cap); fits the
    /// round budget by construction, leaving residual capacity unused.
    KellyFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    /// Signal strength a >= 0; 0 is a coin-flipper, large values approach
    /// perfect knowledge.
    pub acuity: f64,
    /// Standard deviation of the signal noise, > 0.
    pub noise_scale: f64,
    /// Confidence exponent gamma > 0 for the power-map stake rule.
    pub stake_exponent: f64,
    pub stake_rule: StakeRule,
    /// Weight lambda in [0, 1] on the learned per-baseline prior.
    pub learning_weight: f64,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            acuity: 1.5,
            noise_scale: 2.0,
            stake_exponent: 2.0,
            stake_rule: StakeRule::PowerMap,
            learning_weight: 0.5,
            seed: 0,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.acuity < 0.0 || !self.acuity.is_finite() {
            return Err(format!("acuity must be a nonnegative real, got {}", self.acuity));
        }
        if self.noise_scale <= 0.0 || !self.noise_scale.is_finite() {
            return Err(format!("noise_scale must be positive, got {}", self.noise_scale));
        }
        if self.stake_exponent <= 0.0 || !self.stake_exponent.is_finite() {
            return Err(format!(
                "stake_exponent must be positive, got {}",
                self.stake_exponent
            ));
        }
        if !(0.0..=1.0).contains(&self.learning_weight) {
            return Err(format!(
                "learning_weight must be in [0, 1], got {}",
                self.learning_weight
            ));
        }
        Ok(())
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-baseline Beta(1 + wins, 1 + misses) posterior over correctness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct BetaCounts {
    correct: u64,
    total: u64,
}

impl BetaCounts {
    fn mean(self) -> f64 {
        (1.0 + self.correct as f64) / (2.0 + self.total as f64)
    }
}

pub struct SyntheticBettor {
    params: SyntheticParams,
    rng: SplitMix64,
    posteriors: BTreeMap<u32, BetaCounts>,
    stake_cap: Coins,
}

impl SyntheticBettor {
    pub fn new(params: SyntheticParams) -> Self {
        let rng = SplitMix64::new(params.seed).derive("bettor");
        Self {
            params,
            rng,
            posteriors: BTreeMap::new(),
            stake_cap: crate::market::DEFAULT_STAKE_CAP,
        }
    }

    pub fn with_stake_cap(mut self, cap: Coins) -> Self {
        self.stake_cap = cap;
        self
    }

    fn belief(&mut self, item_truth: bool, base_model_id: u32) -> f64 {
        let sign = if item_truth { 1.0 } else { -1.0 };
        let eps = self.rng.next_gaussian() * self.params.noise_scale;
        let signal = logistic(self.params.acuity * sign + eps);
        let prior = self
            .posteriors
            .get(&base_model_id)
            .copied()
            .unwrap_or_default()
            .mean();
        let lambda = self.params.learning_weight;
        lambda * prior + (1.0 - lambda) * signal
    }

    fn stakes_for(&self, confidences: &[f64], balance: Coins) -> Vec<Coins> {
        let cap = self.stake_cap;
        match self.params.stake_rule {
            StakeRule::KellyFraction => confidences
                .iter()
                .map(|c| {
                    let raw = (balance as f64 * c / confidences.len() as f64).floor() as u128;
                    (raw as Coins).clamp(STAKE_MIN, cap)
                })
                .collect(),
            StakeRule::PowerMap => {
                let raw: Vec<u128> = confidences
                    .iter()
                    .map(|c| {
                        1 + ((cap - 1) as f64 * c.powf(self.params.stake_exponent)).floor()
                            as u128
                    })
                    .collect();
                let total: u128 = raw.iter().sum();
                if total <= u128::from(balance) {
                    return raw.iter().map(|r| *r as Coins).collect();
                }
                // disciplined sizing: scale the round to the bankroll,
                // preserving the confidence ordering and the 1-coin floor
                let mut stakes: Vec<Coins> = raw
                    .iter()
                    .map(|r| ((r * u128::from(balance) / total) as Coins).max(STAKE_MIN))
                    .collect();
                let mut sum: u128 = stakes.iter().map(|s| u128::from(*s)).sum();
                while sum > u128::from(balance) {
                    let (idx, _) = stakes
                        .iter()
                        .enumerate()
                        .max_by_key(|(i, s)| (**s, usize::MAX - i))
                        .expect("non-empty");
                    let reducible = stakes[idx] - STAKE_MIN;
                    if reducible == 0 {
                        break;
                    }
                    let cut = reducible.min((sum - u128::from(balance)) as Coins);
                    stakes[idx] -= cut;
                    sum -= u128::from(cut);
                }
                stakes
            }
        }
    }
}

impl PredictorBackend for SyntheticBettor {
    fn identity(&self) -> String {
        let p = &self.params;
        format!(
            "synthetic(a={}, noise={}, gamma={}, lambda={}, rule={:?}, seed={})",
            p.acuity, p.noise_scale, p.stake_exponent, p.learning_weight, p.stake_rule, p.seed
        )
    }

    fn predict_round(&mut self, ctx: &RoundContext) -> Result<String, AdapterError> {
        let beliefs: Vec<f64> = ctx
            .items
            .iter()
            .map(|item| self.belief(item.truth, item.base_model_id))
            .collect();
        let stakes = match ctx.condition {
            Condition::Control => None,
            Condition::Incentive => {
                let balance = ctx.balance.unwrap_or(crate::market::DEFAULT_BANKROLL);
                let confidences: Vec<f64> =
                    beliefs.iter().map(|b| (2.0 * b - 1.0).abs()).collect();
                Some(self.stakes_for(&confidences, balance))
            }
        };

        let mut out = String::new();
        for (i, (item, belief)) in ctx.items.iter().zip(&beliefs).enumerate() {
            let yes = *belief >= 0.5;
            let record = super::ParsedRecord {
                round: ctx.round,
                question_id: item.question_id,
                base_model_id: item.base_model_id,
                predicted_correct: yes,
                stake: stakes.as_ref().map(|s| s[i]),
                rationale: format!(
                    "belief {:.2} on baseline {}",
                    belief, item.base_model_id
                ),
            };
            out.push_str(&super::parse::render_record(&record));
            out.push('\n');
        }
        Ok(out)
    }

    fn observe_feedback(&mut self, feedback: &RoundFeedback) {
        for (_, base_model_id, correct) in feedback.outcomes {
            let counts = self.posteriors.entry(*base_model_id).or_default();
            counts.total += 1;
            if *correct {
                counts.correct += 1;
            }
        }
    }
}

/// Baseline answerer that is right with a fixed probability; wrong answers
/// stay well-formed, so grading measures accuracy rather than parseability.
pub struct SyntheticAnswerer {
    rate: f64,
    rng: SplitMix64,
}

impl SyntheticAnswerer {
    pub fn new(rate: f64, seed: u64) -> Self {
        Self {
            rate,
            rng: SplitMix64::new(seed).derive("answerer"),
        }
    }
}

impl AnswerBackend for SyntheticAnswerer {
    fn identity(&self) -> String {
        format!("synthetic-baseline(rate={})", self.rate)
    }

    fn answer_question(&mut self, question: &Question) -> Result<String, AdapterError> {
        let hit = self.rng.next_f64() < self.rate;
        let answer = if hit {
            question.answer
        } else {
            match question.answer {
                Answer::Integer(v) => Answer::Integer(v + 1 + self.rng.next_below(9) as i128),
                Answer::YesNo(b) => Answer::YesNo(!b),
            }
        };
        Ok(canonical_answer_text(&answer))
    }
}

/// Always answers with the exact canonical answer; useful as a perfect
/// baseline in tests.
pub struct EchoAnswerer;

impl AnswerBackend for EchoAnswerer {
    fn identity(&self) -> String {
        "echo-oracle".into()
    }

    fn answer_question(&mut self, question: &Question) -> Result<String, AdapterError> {
        Ok(canonical_answer_text(&question.answer))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::{parse_records, RoundItem};

    fn items(n: usize, seed: u64) -> Vec<RoundItem> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|i| RoundItem {
                question_id: (i / 6) as u32 + 1,
                base_model_id: (i % 6) as u32 + 1,
                truth: rng.next_below(2) == 0,
            })
            .collect()
    }

    fn run_round(bettor: &mut SyntheticBettor, items: &[RoundItem], condition: Condition) -> String {
        let ctx = RoundContext {
            run_id: "test",
            round: 1,
            condition,
            prompt: "",
            items,
            balance: Some(1_000_000),
            expected_records: items.len(),
        };
        bettor.predict_round(&ctx).unwrap()
    }

    #[test]
    fn output_parses_cleanly_and_fits_budget() {
        let mut bettor = SyntheticBettor::new(SyntheticParams::default());
        let items = items(150, 5);
        let text = run_round(&mut bettor, &items, Condition::Incentive);
        let report = parse_records(&text, Condition::Incentive, 150, 100_000);
        assert!(report.is_clean(), "{:?}", report.errors);
        let total: u64 = report.records.iter().map(|r| r.stake.unwrap()).sum();
        assert!(total <= 1_000_000, "round budget respected, got {total}");
        assert!(report.records.iter().all(|r| r.stake.unwrap() >= 1));
    }

    #[test]
    fn deterministic_given_params_and_items() {
        let items = items(150, 9);
        let mut a = SyntheticBettor::new(SyntheticParams::default());
        let mut b = SyntheticBettor::new(SyntheticParams::default());
        let ta = run_round(&mut a, &items, Condition::Incentive);
        let tb = run_round(&mut b, &items, Condition::Incentive);
        assert_eq!(ta, tb);
    }

    #[test]
    fn perfect_knowledge_degenerate_case() {
        // a huge and lambda 0: every prediction matches truth, all stakes
        // saturate before budget scaling
        let params = SyntheticParams {
            acuity: 1e6,
            noise_scale: 1e-6,
            learning_weight: 0.0,
            ..SyntheticParams::default()
        };
        let mut bettor = SyntheticBettor::new(params);
        let items = items(10, 3);
        let ctx = RoundContext {
            run_id: "test",
            round: 1,
            condition: Condition::Incentive,
            prompt: "",
            items: &items,
            balance: Some(10_000_000),
            expected_records: items.len(),
        };
        let text = bettor.predict_round(&ctx).unwrap();
        let report = parse_records(&text, Condition::Incentive, 10, 100_000);
        for (record, item) in report.records.iter().zip(&items) {
            assert_eq!(record.predicted_correct, item.truth);
            assert_eq!(record.stake, Some(100_000));
        }
    }

    #[test]
    fn zero_acuity_is_a_coin_flipper() {
        let params = SyntheticParams {
            acuity: 0.0,
            learning_weight: 0.0,
            seed: 11,
            ..SyntheticParams::default()
        };
        let mut bettor = SyntheticBettor::new(params);
        let n = 10_000;
        let items = items(n, 13);
        let text = run_round(&mut bettor, &items, Condition::Control);
        let report = parse_records(&text, Condition::Control, n, 100_000);
        let hits = report
            .records
            .iter()
            .zip(&items)
            .filter(|(r, i)| r.predicted_correct == i.truth)
            .count();
        let acc = hits as f64 / n as f64;
        assert!((acc - 0.5).abs() < 0.02, "accuracy {acc}");
    }

    #[test]
    fn learning_downgrades_weak_baselines() {
        // with lambda > 0, a baseline observed failing 75% of the time gets
        // fewer Yes predictions than it did cold
        let params = SyntheticParams {
            learning_weight: 0.5,
            seed: 21,
            ..SyntheticParams::default()
        };
        let mut bettor = SyntheticBettor::new(params);
        let weak_items: Vec<RoundItem> = (0..200)
            .map(|i| RoundItem {
                question_id: i + 1,
                base_model_id: 4,
                truth: i % 4 == 0, // 25% true rate
            })
            .collect();
        let yes_rate = |text: &str| {
            let report = parse_records(text, Condition::Control, 200, 100_000);
            report
                .records
                .iter()
                .filter(|r| r.predicted_correct)
                .count() as f64
                / 200.0
        };
        let round1 = run_round(&mut bettor, &weak_items, Condition::Control);
        let rate1 = yes_rate(&round1);
        // feed three rounds of observed outcomes
        let outcomes: Vec<(u32, u32, bool)> = weak_items
            .iter()
            .map(|i| (i.question_id, i.base_model_id, i.truth))
            .collect();
        for round in 1..=3 {
            bettor.observe_feedback(&RoundFeedback {
                round,
                outcomes: &outcomes,
            });
        }
        let round4 = run_round(&mut bettor, &weak_items, Condition::Control);
        let rate4 = yes_rate(&round4);
        assert!(
            rate4 < rate1 - 0.05,
            "yes-rate should drop on a weak baseline: round1 {rate1}, round4 {rate4}"
        );
    }

    #[test]
    fn confidence_tracks_accuracy() {
        // rank the 10k pairs by confidence decile; accuracy must rise with
        // confidence overall (positive Spearman-style trend)
        let params = SyntheticParams {
            learning_weight: 0.0,
            seed: 31,
            ..SyntheticParams::default()
        };
        let mut bettor = SyntheticBettor::new(params);
        let n = 10_000;
        let items = items(n, 17);
        let text = run_round(&mut bettor, &items, Condition::Incentive);
        let report = parse_records(&text, Condition::Incentive, n, 100_000);
        let mut scored: Vec<(u64, bool)> = report
            .records
            .iter()
            .zip(&items)
            .map(|(r, i)| (r.stake.unwrap(), r.predicted_correct == i.truth))
            .collect();
        scored.sort_by_key(|(stake, _)| *stake);
        let decile = n / 10;
        let accs: Vec<f64> = (0..10)
            .map(|d| {
                let chunk = &scored[d * decile..(d + 1) * decile];
                chunk.iter().filter(|(_, c)| *c).count() as f64 / decile as f64
            })
            .collect();
        // rank correlation between decile index and accuracy
        let mean_idx = 4.5;
        let mean_acc = accs.iter().sum::<f64>() / 10.0;
        let cov: f64 = accs
            .iter()
            .enumerate()
            .map(|(i, a)| (i as f64 - mean_idx) * (a - mean_acc))
            .sum();
        assert!(cov > 0.0, "accuracy by confidence decile not increasing: {accs:?}");
        assert!(
            accs[9] > accs[0] + 0.1,
            "top decile should clearly beat bottom: {accs:?}"
        );
    }

    #[test]
    fn kelly_rule_respects_budget_by_construction() {
        let params = SyntheticParams {
            stake_rule: StakeRule::KellyFraction,
            seed: 41,
            ..SyntheticParams::default()
        };
        let mut bettor = SyntheticBettor::new(params);
        let items = items(150, 43);
        let text = run_round(&mut bettor, &items, Condition::Incentive);
        let report = parse_records(&text, Condition::Incentive, 150, 100_000);
        assert!(report.is_clean());
        let total: u64 = report.records.iter().map(|r| r.stake.unwrap()).sum();
        assert!(total <= 1_000_000);
    }

    #[test]
    fn synthetic_answerer_rate_is_honored() {
        use crate::questionbank::{generate_suite, CategoryMix};
        let suite = generate_suite(3, 100, &CategoryMix::default_hundred()).unwrap();
        let mut answerer = SyntheticAnswerer::new(0.25, 7);
        let mut correct = 0;
        let mut total = 0;
        for _ in 0..10 {
            for q in &suite {
                let raw = answerer.answer_question(q).unwrap();
                if crate::questionbank::grade(q, 1, &raw).correct {
                    correct += 1;
                }
                total += 1;
            }
        }
        let acc = f64::from(correct) / f64::from(total);
        assert!((acc - 0.25).abs() < 0.05, "accuracy {acc}");
    }
}
