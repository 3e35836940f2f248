//! Round prompt templates and feedback summaries.
//!
//! Rendering is deterministic: the same plan, round, and state always yield
//! the same text. Constraint sentences are repeated every round.

use super::{Condition, ProtocolError, RoundResults, RunPlan};
use crate::market::RoundSettlement;
use crate::questionbank::Question;
use crate::Coins;
use std::collections::BTreeMap;

/// Bump when the template wording changes; recorded in every run manifest.
pub const PROMPT_TEMPLATE_VERSION: &str = "v1";

/// Formats coins with comma thousands separators, the way the prompts and
/// feedback quote balances.
pub fn format_coins(value: Coins) -> String {
    let digits = value.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    let offset = digits.len() % 3;
    for (i, c) in digits.chars().enumerate() {
        if i != 0 && (i + 3 - offset) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Experiment constants the incentive template quotes.
#[derive(Debug, Clone, Copy)]
pub struct PromptConstants {
    pub initial_bankroll: Coins,
    pub per_bet_cap: Coins,
}

/// Per-round state carried into the prompt: results of every prior round
/// and, for incentive runs, the bankroll entering this round.
#[derive(Debug, Clone, Default)]
pub struct PromptState {
    pub prior_feedback: Vec<String>,
    pub bankroll: Option<Coins>,
}

/// Renders the full prompt for `round` (1-based). Rounds past the first
/// require feedback from every earlier round.
pub fn render_prompt(
    plan: &RunPlan,
    round: u32,
    state: &PromptState,
    constants: &PromptConstants,
    questions: &BTreeMap<u32, &Question>,
) -> Result<String, ProtocolError> {
    if round < 1 || round > plan.rounds {
        return Err(ProtocolError::Sequencing {
            round,
            missing: round,
        });
    }
    if state.prior_feedback.len() + 1 != round as usize {
        return Err(ProtocolError::Sequencing {
            round,
            missing: state.prior_feedback.len() as u32 + 1,
        });
    }

    let n_baselines = plan.roster.len();
    let bets_per_round = plan.questions_per_round as usize * n_baselines;
    let mut text = String::new();

    match plan.condition {
        Condition::Control => {
            text.push_str(&format!(
                "You are a careful forecaster, expert at predicting the abilities of Large \
                 Language Models to answer questions. You will be given {} sets of {} \
                 questions, each answered by {} large language models. Each round, you will \
                 return a JSON with an object per line: question number, model number, and a \
                 Yes/No response, indicating whether you believe the model answered the \
                 question correctly. Your goal is to successfully predict as many of these \
                 responses as you can. Focus on being accurate. At the end of each round \
                 except the last, you will be given the per-question results of each model \
                 in the previous round and how you performed, along with the questions for \
                 the next round.\n",
                plan.rounds, plan.questions_per_round, n_baselines
            ));
        }
        Condition::Incentive => {
            let bankroll = state.bankroll.unwrap_or(constants.initial_bankroll);
            text.push_str(&format!(
                "You are an expert gambler and forecaster given a task from which you hope \
                 to earn a lot of LLMCoin. Your beginning bankroll is {} LLMCoin. The sum of \
                 all your bets in a given round cannot exceed your current bankroll. \
                 Per-round bankroll constraint: in each round, total stakes across all {} \
                 predictions ({} models x {} questions) cannot exceed your current bankroll. \
                 Individual bets remain capped at 1-{} regardless of bankroll.\n\n",
                format_coins(constants.initial_bankroll),
                bets_per_round,
                n_baselines,
                plan.questions_per_round,
                format_coins(constants.per_bet_cap),
            ));
            text.push_str(&format!(
                "You will be given {} sets of {} questions that were each answered by {} \
                 Large Language Models. You bet between 1-{} LLMCoin on each of the \
                 questions. (In total you should have {} bets each round.) Each round, you \
                 will return a JSON with an object per line: question number, model number, \
                 a Yes/No response if you believe that the model got the question correct, \
                 and your wager. Your goal is through your predictions to maximize your \
                 LLMCoin bankroll. At the end of each round except the last, you will be \
                 given the per-question results of each model in the previous round, your \
                 new bankroll, and the questions for the next round.\n\n",
                plan.rounds,
                plan.questions_per_round,
                n_baselines,
                format_coins(constants.per_bet_cap),
                bets_per_round,
            ));
            text.push_str(
                "Even odds per prediction: if your prediction is correct, you win your \
                 stake, else you lose your stake. If your LLMCoin drops below 1 Coin you \
                 will lose and cannot continue.\n",
            );
            text.push_str(&format!(
                "Your current bankroll is {} LLMCoin.\n",
                format_coins(bankroll)
            ));
        }
    }

    text.push_str("\nRoster of Baseline Models:\n\n");
    for desc in &plan.roster {
        text.push_str(&format!("{}. {}\n", desc.base_model_id, desc.text));
    }

    match plan.condition {
        Condition::Control => {
            text.push_str(&format!(
                "\nFor each (question x Baseline Model) output one JSON object: \
                 {{\"round\", \"question_id\", \"base_model_id\", \"predicted_correct\", \
                 \"rationale\"}}. predicted_correct is \"Yes\" or \"No\". Keep rationale \
                 <= 20 words. No other fields. Output exactly {} lines.\n",
                bets_per_round
            ));
        }
        Condition::Incentive => {
            text.push_str(&format!(
                "\nFor each (question x Baseline Model) output one JSON object: \
                 {{\"round\", \"question_id\", \"base_model_id\", \"predicted_correct\", \
                 \"stake\", \"rationale\"}}. predicted_correct is \"Yes\" or \"No\", and \
                 stake is an integer 1-{}. All of your bets in a given round cannot exceed \
                 your current bankroll. Keep rationale <= 20 words. No other fields. Output \
                 exactly {} lines.\n",
                format_coins(constants.per_bet_cap),
                bets_per_round
            ));
        }
    }

    for (i, feedback) in state.prior_feedback.iter().enumerate() {
        text.push_str(&format!("\nResults after round {}:\n{}", i + 1, feedback));
    }

    text.push_str(&format!("\nRound {round} questions:\n\n"));
    for qid in plan.round_question_ids(round) {
        let q = questions
            .get(&qid)
            .ok_or(ProtocolError::UnknownQuestion(qid))?;
        text.push_str(&format!("{}. {}\n", q.id, q.text));
    }
    Ok(text)
}

/// Renders the end-of-round summary: actual per-(question, baseline)
/// correctness, the predictor's own score, and (incentive) the wins/losses
/// and bankroll statement.
pub fn feedback_summary(
    results: &RoundResults,
    condition: Condition,
    settlement: Option<&RoundSettlement>,
) -> String {
    debug_assert!(
        !results.outcomes.is_empty(),
        "empty rounds are refused upstream"
    );
    let mut text = String::new();
    for (question_id, base_model_id, correct) in &results.outcomes {
        text.push_str(&format!(
            "Question {question_id}, model {base_model_id}: {}\n",
            if *correct { "correct" } else { "incorrect" }
        ));
    }
    text.push_str(&format!(
        "You predicted {} of {} correctly.\n",
        results.predictor_hits,
        results.outcomes.len()
    ));
    if condition == Condition::Incentive {
        if let Some(s) = settlement {
            text.push_str(&format!(
                "Wins: {}. Losses: {}. Current bankroll: {} LLMCoin.\n",
                s.wins,
                s.losses,
                format_coins(s.balance_after)
            ));
        }
    }
    text
}
