//! The LLMCoin ledger: stake validation, even-odds settlement, bankruptcy,
//! and stake binning.
//!
//! Coins are exact unsigned integers throughout and ROI is an exact
//! rational. The ledger is the external enforcer of the constraints the
//! betting prompt states; predictors are never trusted to police their own
//! arithmetic.

use crate::{Coins, Rational};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Default per-bet stake bounds: an integer between 1 and 100,000.
pub const STAKE_MIN: Coins = 1;
pub const DEFAULT_STAKE_CAP: Coins = 100_000;
/// Default starting bankroll.
pub const DEFAULT_BANKROLL: Coins = 1_000_000;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("round {round} bet {index} ({question_id}/{base_model_id}): {reason}")]
    Validation {
        round: u32,
        index: usize,
        question_id: u32,
        base_model_id: u32,
        reason: String,
    },
    #[error("cannot clamp round {round}: {bets} minimum stakes exceed balance {balance}")]
    Unclampable { round: u32, bets: usize, balance: Coins },
    #[error("missing outcome for question {question_id} baseline {base_model_id}")]
    MissingOutcome { question_id: u32, base_model_id: u32 },
    #[error("ledger is {status:?}, expected active")]
    NotActive { status: LedgerStatus },
    #[error("roi requires a finished ledger, status is {status:?}")]
    NotFinished { status: LedgerStatus },
    #[error("roi undefined for zero initial balance")]
    ZeroInitial,
    #[error("stake must be at least 1 coin")]
    StakeBelowMinimum,
}

/// One wager: a prediction plus a stake.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetRecord {
    pub round: u32,
    pub question_id: u32,
    pub base_model_id: u32,
    pub predicted_correct: bool,
    pub stake: Coins,
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LedgerStatus {
    Active,
    Bankrupt,
    Completed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    RoundOverspend,
    PerBetCap,
    StakeBelowMin,
    NonIntegerStake,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationAction {
    Rejected,
    Clamped,
    FlaggedAndAccepted,
}

/// A recorded constraint breach, always with positive magnitude.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationFlag {
    pub round: u32,
    pub kind: ViolationKind,
    pub magnitude: Coins,
    pub action_taken: ViolationAction,
}

/// Outcome of settling one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundSettlement {
    pub round: u32,
    pub wins: u32,
    pub losses: u32,
    pub coins_won: Coins,
    pub coins_lost: Coins,
    pub balance_after: Coins,
}

/// What to do when a round violates stake constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationPolicy {
    Reject,
    Clamp,
    Flag,
}

/// A run's bankroll state machine. Single-owner, sequential; settle rounds
/// in order until completed or bankrupt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub initial: Coins,
    pub balance: Coins,
    pub round_history: Vec<RoundSettlement>,
    pub status: LedgerStatus,
    pub violations: Vec<ViolationFlag>,
}

impl Ledger {
    pub fn new(initial: Coins) -> Self {
        Self {
            initial,
            balance: initial,
            round_history: Vec::new(),
            status: LedgerStatus::Active,
            violations: Vec::new(),
        }
    }

    /// Marks a still-active ledger as having finished its run normally.
    pub fn complete(&mut self) {
        if self.status == LedgerStatus::Active {
            self.status = LedgerStatus::Completed;
        }
    }
}

/// Checks a round of bets against per-bet bounds and the round-sum
/// constraint (sum of stakes <= current balance, boundary inclusive).
///
/// Per-bet bounds are checked first, then the round sum. `Reject` errors on
/// the first offending record; `Clamp` pulls stakes into bounds and scales
/// the round down proportionally (integer floor, minimum 1) until the sum
/// fits; `Flag` accepts everything verbatim and records flags.
pub fn validate_round(
    bets: &[BetRecord],
    balance: Coins,
    cap: Coins,
    policy: ViolationPolicy,
) -> Result<(Vec<BetRecord>, Vec<ViolationFlag>), MarketError> {
    let round = bets.first().map(|b| b.round).unwrap_or(0);
    let mut flags = Vec::new();
    let mut accepted: Vec<BetRecord> = bets.to_vec();

    // per-bet bounds first
    for (index, bet) in bets.iter().enumerate() {
        let (kind, magnitude) = if bet.stake < STAKE_MIN {
            (ViolationKind::StakeBelowMin, STAKE_MIN - bet.stake)
        } else if bet.stake > cap {
            (ViolationKind::PerBetCap, bet.stake - cap)
        } else {
            continue;
        };
        match policy {
            ViolationPolicy::Reject => {
                return Err(MarketError::Validation {
                    round: bet.round,
                    index,
                    question_id: bet.question_id,
                    base_model_id: bet.base_model_id,
                    reason: format!(
                        "stake {} outside [{STAKE_MIN}, {cap}]",
                        bet.stake
                    ),
                });
            }
            ViolationPolicy::Clamp => {
                accepted[index].stake = bet.stake.clamp(STAKE_MIN, cap);
                flags.push(ViolationFlag {
                    round: bet.round,
                    kind,
                    magnitude,
                    action_taken: ViolationAction::Clamped,
                });
            }
            ViolationPolicy::Flag => flags.push(ViolationFlag {
                round: bet.round,
                kind,
                magnitude,
                action_taken: ViolationAction::FlaggedAndAccepted,
            }),
        }
    }

    // then the round sum
    let sum: u128 = accepted.iter().map(|b| u128::from(b.stake)).sum();
    if sum > u128::from(balance) {
        let overspend = (sum - u128::from(balance)) as Coins;
        match policy {
            ViolationPolicy::Reject => {
                return Err(MarketError::Validation {
                    round,
                    index: 0,
                    question_id: bets.first().map(|b| b.question_id).unwrap_or(0),
                    base_model_id: bets.first().map(|b| b.base_model_id).unwrap_or(0),
                    reason: format!("round stakes sum {sum} exceeds balance {balance}"),
                });
            }
            ViolationPolicy::Clamp => {
                scale_round_to_balance(&mut accepted, balance, round)?;
                flags.push(ViolationFlag {
                    round,
                    kind: ViolationKind::RoundOverspend,
                    magnitude: overspend,
                    action_taken: ViolationAction::Clamped,
                });
            }
            ViolationPolicy::Flag => flags.push(ViolationFlag {
                round,
                kind: ViolationKind::RoundOverspend,
                magnitude: overspend,
                action_taken: ViolationAction::FlaggedAndAccepted,
            }),
        }
    }

    Ok((accepted, flags))
}

/// Proportionally floors stakes so the round sum fits the balance while
/// keeping every stake >= 1. Any residue left by the minimum-stake floor is
/// shaved off the largest stakes, deterministically.
fn scale_round_to_balance(
    bets: &mut [BetRecord],
    balance: Coins,
    round: u32,
) -> Result<(), MarketError> {
    if (bets.len() as u128) * u128::from(STAKE_MIN) > u128::from(balance) {
        return Err(MarketError::Unclampable {
            round,
            bets: bets.len(),
            balance,
        });
    }
    let sum: u128 = bets.iter().map(|b| u128::from(b.stake)).sum();
    for bet in bets.iter_mut() {
        let scaled = u128::from(bet.stake) * u128::from(balance) / sum;
        bet.stake = (scaled as Coins).max(STAKE_MIN);
    }
    let mut new_sum: u128 = bets.iter().map(|b| u128::from(b.stake)).sum();
    while new_sum > u128::from(balance) {
        // shave the currently-largest stake by the remaining excess
        let excess = (new_sum - u128::from(balance)) as Coins;
        let (idx, _) = bets
            .iter()
            .enumerate()
            .max_by_key(|(i, b)| (b.stake, usize::MAX - i))
            .expect("non-empty round");
        let reducible = bets[idx].stake - STAKE_MIN;
        let cut = reducible.min(excess);
        bets[idx].stake -= cut;
        new_sum -= u128::from(cut);
        if cut == 0 {
            break; // everything at minimum already; guarded above
        }
    }
    Ok(())
}

/// Settles one round of bets at even odds and appends it to the ledger.
///
/// A bet wins iff its prediction matches the actual outcome; winners add
/// their stake, losers subtract it. If the balance ends the round below one
/// coin the ledger goes bankrupt and no further rounds may settle.
pub fn settle_round(
    ledger: &mut Ledger,
    bets: &[BetRecord],
    outcomes: &BTreeMap<(u32, u32), bool>,
) -> Result<RoundSettlement, MarketError> {
    if ledger.status != LedgerStatus::Active {
        return Err(MarketError::NotActive {
            status: ledger.status,
        });
    }
    let round = bets.first().map(|b| b.round).unwrap_or(0);
    let mut wins = 0u32;
    let mut losses = 0u32;
    let mut coins_won: u128 = 0;
    let mut coins_lost: u128 = 0;
    for bet in bets {
        let actual = outcomes
            .get(&(bet.question_id, bet.base_model_id))
            .copied()
            .ok_or(MarketError::MissingOutcome {
                question_id: bet.question_id,
                base_model_id: bet.base_model_id,
            })?;
        if bet.predicted_correct == actual {
            wins += 1;
            coins_won += u128::from(bet.stake);
        } else {
            losses += 1;
            coins_lost += u128::from(bet.stake);
        }
    }

    let net = i128::from(ledger.balance) + coins_won as i128 - coins_lost as i128;
    // Flag-policy overspends can drive the exact net below zero; the
    // representational balance floors at zero either way.
    let balance_after = if net < 0 { 0 } else { net as Coins };
    ledger.balance = balance_after;
    if net < i128::from(STAKE_MIN) {
        ledger.status = LedgerStatus::Bankrupt;
    }
    let settlement = RoundSettlement {
        round,
        wins,
        losses,
        coins_won: coins_won as Coins,
        coins_lost: coins_lost as Coins,
        balance_after,
    };
    ledger.round_history.push(settlement.clone());
    Ok(settlement)
}

/// Return on investment, exact: (final - initial) / initial.
pub fn roi(ledger: &Ledger) -> Result<Rational, MarketError> {
    if ledger.status == LedgerStatus::Active {
        return Err(MarketError::NotFinished {
            status: ledger.status,
        });
    }
    if ledger.initial == 0 {
        return Err(MarketError::ZeroInitial);
    }
    Ok(Rational::new(
        i128::from(ledger.balance) - i128::from(ledger.initial),
        i128::from(ledger.initial),
    ))
}

/// Renders an exact rational as a whole percentage, half away from zero.
pub fn rational_to_percent(r: Rational) -> i64 {
    let scaled = r * Rational::from_integer(100);
    let (num, den) = (scaled.numer(), scaled.denom());
    let doubled = 2 * num + num.signum() * den;
    (doubled / (2 * den)) as i64
}

/// Confidence bins over stake size.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum StakeBin {
    Tiny,
    Mid,
    Large,
    Whale,
}

impl StakeBin {
    pub const ALL: [StakeBin; 4] = [StakeBin::Tiny, StakeBin::Mid, StakeBin::Large, StakeBin::Whale];

    pub fn label(self) -> &'static str {
        match self {
            StakeBin::Tiny => "1-1,000 (tiny)",
            StakeBin::Mid => "1,001-10,000 (mid)",
            StakeBin::Large => "10,001-39,999 (large)",
            StakeBin::Whale => ">=40,000 (whale)",
        }
    }
}

/// Bins a stake: tiny 1-1,000; mid 1,001-10,000; large 10,001-39,999;
/// whale 40,000 and up.
pub fn stake_bin(stake: Coins) -> Result<StakeBin, MarketError> {
    match stake {
        0 => Err(MarketError::StakeBelowMinimum),
        1..=1_000 => Ok(StakeBin::Tiny),
        1_001..=10_000 => Ok(StakeBin::Mid),
        10_001..=39_999 => Ok(StakeBin::Large),
        _ => Ok(StakeBin::Whale),
    }
}
