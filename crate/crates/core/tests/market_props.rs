//! Ledger soundness properties: exact conservation, order independence,
//! clamp bounds, and the bankruptcy state machine.

use llmcoin_core::market::{
    settle_round, stake_bin, validate_round, BetRecord, Ledger, LedgerStatus, StakeBin,
    ViolationPolicy, DEFAULT_STAKE_CAP,
};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn arb_round(round: u32, max_stake: u64) -> impl Strategy<Value = Vec<(BetRecord, bool)>> {
    prop::collection::vec(
        (1u64..=max_stake, any::<bool>(), any::<bool>()),
        1..60,
    )
    .prop_map(move |rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (stake, predicted, actual))| {
                (
                    BetRecord {
                        round,
                        question_id: (i / 6) as u32 + 1,
                        base_model_id: (i % 6) as u32 + 1,
                        predicted_correct: predicted,
                        stake,
                        rationale: String::new(),
                    },
                    actual,
                )
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    /// balance = initial + total won - total lost, exactly, across any
    /// sequence of settled rounds.
    #[test]
    fn conservation_over_random_settlements(
        rounds in prop::collection::vec(arb_round(1, 5_000), 1..6),
        initial in 1_000_000u64..10_000_000,
    ) {
        let mut ledger = Ledger::new(initial);
        let mut won: u128 = 0;
        let mut lost: u128 = 0;
        for (k, round) in rounds.into_iter().enumerate() {
            if ledger.status != LedgerStatus::Active {
                break;
            }
            let bets: Vec<BetRecord> = round.iter().map(|(b, _)| BetRecord {
                round: k as u32 + 1,
                ..b.clone()
            }).collect();
            let outcomes: BTreeMap<(u32, u32), bool> = round
                .iter()
                .map(|(b, actual)| ((b.question_id, b.base_model_id), *actual))
                .collect();
            let s = settle_round(&mut ledger, &bets, &outcomes).unwrap();
            won += u128::from(s.coins_won);
            lost += u128::from(s.coins_lost);
            prop_assert_eq!(s.wins as usize + s.losses as usize, bets.len());
        }
        let expected = i128::from(initial) + won as i128 - lost as i128;
        prop_assert_eq!(i128::from(ledger.balance), expected.max(0));
        // bankrupt iff the exact balance fell below one coin
        prop_assert_eq!(ledger.status == LedgerStatus::Bankrupt, expected < 1);
    }

    /// Settling a permutation of the same bets yields identical totals.
    #[test]
    fn settlement_is_order_independent(round in arb_round(1, 10_000), seed in any::<u64>()) {
        let outcomes: BTreeMap<(u32, u32), bool> = round
            .iter()
            .map(|(b, actual)| ((b.question_id, b.base_model_id), *actual))
            .collect();
        let bets: Vec<BetRecord> = round.iter().map(|(b, _)| b.clone()).collect();

        let mut ledger_a = Ledger::new(100_000_000);
        let sa = settle_round(&mut ledger_a, &bets, &outcomes).unwrap();

        let mut shuffled = bets.clone();
        let mut rng = llmcoin_core::rng::SplitMix64::new(seed);
        rng.shuffle(&mut shuffled);
        let mut ledger_b = Ledger::new(100_000_000);
        let sb = settle_round(&mut ledger_b, &shuffled, &outcomes).unwrap();

        prop_assert_eq!(sa, sb);
    }

    /// Clamping always lands within budget with every stake >= 1, whenever
    /// that is possible at all.
    #[test]
    fn clamp_fits_budget(round in arb_round(1, 200_000), balance in 100u64..2_000_000) {
        let bets: Vec<BetRecord> = round.iter().map(|(b, _)| b.clone()).collect();
        match validate_round(&bets, balance, DEFAULT_STAKE_CAP, ViolationPolicy::Clamp) {
            Ok((accepted, _)) => {
                let sum: u128 = accepted.iter().map(|b| u128::from(b.stake)).sum();
                prop_assert!(sum <= u128::from(balance));
                prop_assert!(accepted.iter().all(|b| b.stake >= 1));
                prop_assert!(accepted.iter().all(|b| b.stake <= DEFAULT_STAKE_CAP));
                prop_assert_eq!(accepted.len(), bets.len());
            }
            Err(_) => {
                // only legitimate when even 1-coin stakes cannot fit
                prop_assert!(bets.len() as u128 > u128::from(balance));
            }
        }
    }

    /// Bins are total and monotone in the stake.
    #[test]
    fn stake_bins_are_monotone(a in 1u64..200_000, b in 1u64..200_000) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(stake_bin(lo).unwrap() <= stake_bin(hi).unwrap());
    }
}

#[test]
fn bankrupt_ledger_never_settles_again() {
    let mut ledger = Ledger::new(100);
    let bet = BetRecord {
        round: 1,
        question_id: 1,
        base_model_id: 1,
        predicted_correct: true,
        stake: 100,
        rationale: String::new(),
    };
    let outcomes = BTreeMap::from([((1, 1), false)]);
    settle_round(&mut ledger, std::slice::from_ref(&bet), &outcomes).unwrap();
    assert_eq!(ledger.status, LedgerStatus::Bankrupt);
    assert_eq!(ledger.balance, 0);
    for _ in 0..3 {
        assert!(settle_round(&mut ledger, std::slice::from_ref(&bet), &outcomes).is_err());
    }
    assert_eq!(ledger.round_history.len(), 1);
}

#[test]
fn bin_order_is_tiny_mid_large_whale() {
    assert!(StakeBin::Tiny < StakeBin::Mid);
    assert!(StakeBin::Mid < StakeBin::Large);
    assert!(StakeBin::Large < StakeBin::Whale);
}
