//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values (run with `--nocapture` to see them).
//!
//! Bounds and tolerances are pinned in the assertions; the synthetic
//! experiment criteria use fixed seeds end to end.

use llmcoin_core::adapters::{
    parse_records, AnswerBackend, BackendSpec, ParseErrorKind, PredictorBackend, RoundContext,
    SyntheticBettor, SyntheticParams,
};
use llmcoin_core::analysis::{
    self, accuracy_tables, hypothesis_tests, round_slope, run_accuracy, stake_calibration,
    RunAccuracy,
};
use llmcoin_core::market::{
    self, roi, settle_round, stake_bin, validate_round, BetRecord, Ledger, LedgerStatus,
    StakeBin, ViolationKind, ViolationPolicy,
};
use llmcoin_core::protocol::{
    self, collect_baseline_answers, execute_run, plan_run, Condition, MaskedDescription,
    PlanSpec, RunLog, RunPolicies, RunStatus, Tier,
};
use llmcoin_core::questionbank::{
    self, generate_suite, BaselineAnswerSet, CategoryMix, Question,
};
use llmcoin_core::rng::SplitMix64;
use llmcoin_core::Rational;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/run_summaries.json")
}

fn fixture_runs() -> Vec<RunAccuracy> {
    llmcoin_core::analysis::report::load_run_summaries(&fixture_path())
        .expect("run summaries fixture")
        .into_iter()
        .map(RunAccuracy::from)
        .collect()
}

// ---------------------------------------------------------------------------
// criterion 1: statistics replication from the 18-run fixture
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_statistics_replication() {
    let started = Instant::now();
    let runs = fixture_runs();
    assert_eq!(runs.len(), 18);
    let (h1, h2) = hypothesis_tests(&runs).unwrap();
    let tables = accuracy_tables(&runs).unwrap();

    assert!((h1.t_statistic - 1.81).abs() <= 0.02, "H1 t = {}", h1.t_statistic);
    assert!((h1.p_two_tailed - 0.089).abs() <= 0.003, "H1 p = {}", h1.p_two_tailed);
    assert!((h1.cohens_d - 0.86).abs() <= 0.02, "H1 d = {}", h1.cohens_d);
    assert_eq!(h1.degrees_of_freedom, 16);

    assert!((h2.t_statistic - 2.87).abs() <= 0.02, "H2 t = {}", h2.t_statistic);
    assert!((h2.p_two_tailed - 0.011).abs() <= 0.002, "H2 p = {}", h2.p_two_tailed);
    assert!((h2.cohens_d - 1.35).abs() <= 0.02, "H2 d = {}", h2.cohens_d);

    let all = |c: Condition| {
        tables
            .aggregates
            .iter()
            .find(|a| a.predictor == "All" && a.condition == c)
            .unwrap()
    };
    let control = all(Condition::Control);
    let incentive = all(Condition::Incentive);
    assert!((control.accuracy - 79.1).abs() <= 0.05, "{}", control.accuracy);
    assert!((incentive.accuracy - 81.5).abs() <= 0.05, "{}", incentive.accuracy);
    assert!((control.r4_minus_r1 - 2.9).abs() <= 0.1, "{}", control.r4_minus_r1);
    assert!((incentive.r4_minus_r1 - 12.0).abs() <= 0.1, "{}", incentive.r4_minus_r1);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "PASS criterion 1: H1 t={:.3} p={:.4} d={:.3}; H2 t={:.3} p={:.4} d={:.3}; \
         aggregates {:.2}/{:.2}, deltas {:.2}/{:.2} ({elapsed:?})",
        h1.t_statistic,
        h1.p_two_tailed,
        h1.cohens_d,
        h2.t_statistic,
        h2.p_two_tailed,
        h2.cohens_d,
        control.accuracy,
        incentive.accuracy,
        control.r4_minus_r1,
        incentive.r4_minus_r1
    );
}

// ---------------------------------------------------------------------------
// criterion 2: OLS slope replication on the round-by-condition columns
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_slope_replication() {
    let started = Instant::now();
    let incentive = round_slope(&[75.3, 79.1, 84.4, 87.2]).unwrap();
    let control = round_slope(&[79.4, 74.7, 80.0, 82.3]).unwrap();
    assert!((incentive - 4.10).abs() <= 0.05, "incentive slope {incentive}");
    assert!((control - 1.40).abs() <= 0.05, "control slope {control}");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("PASS criterion 2: slopes {incentive:.3} / {control:.3} pp per round ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// criterion 3: mean ROI over the nine published final bankrolls
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_roi_replication() {
    let finals: [u64; 9] = [
        5_800_000, 6_100_000, 7_100_000, 6_700_000, 5_000_000, 4_800_000, 9_100_000, 6_300_000,
        9_300_000,
    ];
    let mut sum = Rational::from_integer(0);
    for f in finals {
        let mut ledger = Ledger::new(1_000_000);
        ledger.balance = f;
        ledger.complete();
        sum += roi(&ledger).unwrap();
    }
    let mean = sum / Rational::from_integer(9);
    let percent = market::rational_to_percent(mean);
    assert!((percent - 569).abs() <= 1, "mean ROI {percent}%");
    println!("PASS criterion 3: mean ROI {percent}% (exact {mean})");
}

// ---------------------------------------------------------------------------
// criterion 4: oracle soundness against brute-force references
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_oracle_soundness() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0xACCE97);

    // modpow vs repeated multiplication
    for _ in 0..1_000 {
        let base = rng.next_range(0, 1 << 20);
        let exponent = rng.next_range(0, 10_000);
        let modulus = rng.next_range(1, 1 << 20);
        let mut expect: u128 = 1 % u128::from(modulus);
        for _ in 0..exponent {
            expect = expect * u128::from(base) % u128::from(modulus);
        }
        assert_eq!(
            questionbank::modpow(base, exponent, modulus).unwrap(),
            expect as u64
        );
    }

    // primality vs trial division
    for _ in 0..1_000 {
        let n = rng.next_range(0, 1_000_000);
        let mut reference = n >= 2;
        let mut d = 2u64;
        while d * d <= n {
            if n % d == 0 {
                reference = false;
                break;
            }
            d += 1;
        }
        assert_eq!(questionbank::is_prime(n), reference, "n = {n}");
    }

    // gcd/lcm product identity and divisibility
    for _ in 0..1_000 {
        let a = rng.next_range(1, 1 << 30);
        let b = rng.next_range(1, 1 << 30);
        let (g, l) = questionbank::gcd_lcm(a, b).unwrap();
        assert_eq!(u128::from(g) * u128::from(l), u128::from(a) * u128::from(b));
        assert_eq!(a % g, 0);
        assert_eq!(b % g, 0);
    }

    // positional round-trip
    for _ in 0..1_000 {
        let n = rng.next_u64() >> 1; // < 2^63
        let radix = rng.next_range(2, 16) as u32;
        let digits = questionbank::oracle::render_radix(n, radix);
        assert_eq!(questionbank::base_convert(&digits, radix).unwrap(), n);
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("PASS criterion 4: 4000 oracle cross-checks, zero mismatches ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// criterion 5: ledger soundness
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_ledger_soundness() {
    // exact conservation over randomized settlement sequences
    let mut rng = SplitMix64::new(0x1ED6E2);
    for _ in 0..200 {
        let initial = rng.next_range(10_000, 10_000_000);
        let mut ledger = Ledger::new(initial);
        let mut won: u128 = 0;
        let mut lost: u128 = 0;
        let n_rounds = rng.next_range(1, 5);
        for round in 1..=n_rounds {
            if ledger.status != LedgerStatus::Active {
                break;
            }
            let n_bets = rng.next_range(1, 80);
            let mut bets = Vec::new();
            let mut outcomes = BTreeMap::new();
            for i in 0..n_bets {
                let stake = rng.next_range(1, 5_000);
                let predicted = rng.next_below(2) == 0;
                let actual = rng.next_below(2) == 0;
                bets.push(BetRecord {
                    round: round as u32,
                    question_id: i as u32 + 1,
                    base_model_id: 1,
                    predicted_correct: predicted,
                    stake,
                    rationale: String::new(),
                });
                outcomes.insert((i as u32 + 1, 1u32), actual);
            }
            let s = settle_round(&mut ledger, &bets, &outcomes).unwrap();
            won += u128::from(s.coins_won);
            lost += u128::from(s.coins_lost);
        }
        let exact = i128::from(initial) + won as i128 - lost as i128;
        assert_eq!(i128::from(ledger.balance), exact.max(0), "conservation");
        assert_eq!(ledger.status == LedgerStatus::Bankrupt, exact < 1);
    }

    // the 0.2%-style overspend fixture under all three policies
    let bets: Vec<BetRecord> = (0..150)
        .map(|i| BetRecord {
            round: 1,
            question_id: i / 6 + 1,
            base_model_id: i % 6 + 1,
            predicted_correct: true,
            stake: 6_680,
            rationale: String::new(),
        })
        .collect();
    assert_eq!(bets.iter().map(|b| b.stake).sum::<u64>(), 1_002_000);
    assert!(validate_round(&bets, 1_000_000, 100_000, ViolationPolicy::Reject).is_err());
    for policy in [ViolationPolicy::Clamp, ViolationPolicy::Flag] {
        let (accepted, flags) = validate_round(&bets, 1_000_000, 100_000, policy).unwrap();
        let overspend: Vec<_> = flags
            .iter()
            .filter(|f| f.kind == ViolationKind::RoundOverspend)
            .collect();
        assert_eq!(overspend.len(), 1, "{policy:?}");
        assert_eq!(overspend[0].magnitude, 2_000, "{policy:?}");
        if policy == ViolationPolicy::Clamp {
            assert!(accepted.iter().map(|b| u128::from(b.stake)).sum::<u128>() <= 1_000_000);
        } else {
            assert_eq!(accepted, bets);
        }
    }

    // bankruptcy fixture: an all-in, all-wrong round terminates the run
    let (suite, answers, roster) = perfect_world(42);
    let plan = plan_run(
        &suite,
        &roster,
        &PlanSpec::standard("bankrupt-1", Condition::Incentive, 11),
    )
    .unwrap();
    struct AllInContrarian;
    impl PredictorBackend for AllInContrarian {
        fn identity(&self) -> String {
            "all-in-contrarian".into()
        }
        fn predict_round(&mut self, ctx: &RoundContext) -> Result<String, llmcoin_core::adapters::AdapterError> {
            // bet the whole bankroll on every baseline being wrong
            let balance = ctx.balance.unwrap();
            let n = ctx.items.len() as u64;
            let each = balance / n;
            let mut first_extra = balance - each * n;
            let mut out = String::new();
            for item in ctx.items {
                let stake = each + first_extra;
                first_extra = 0;
                out.push_str(&format!(
                    "{{\"round\": {}, \"question_id\": {}, \"base_model_id\": {}, \"predicted_correct\": \"No\", \"stake\": {}, \"rationale\": \"contrarian\"}}\n",
                    ctx.round, item.question_id, item.base_model_id, stake
                ));
            }
            Ok(out)
        }
    }
    let mut backend = AllInContrarian;
    let log = execute_run(
        &plan,
        &suite,
        &answers,
        &mut backend,
        "contrarian",
        &RunPolicies {
            record_timestamps: false,
            ..RunPolicies::default()
        },
        None,
    )
    .unwrap();
    assert_eq!(log.status, RunStatus::Bankrupt);
    assert_eq!(log.records.len(), 1, "run terminated after the bankrupting round");
    let ledger = log.ledger.unwrap();
    assert_eq!(ledger.status, LedgerStatus::Bankrupt);
    assert_eq!(ledger.balance, 0);

    println!("PASS criterion 5: conservation exact, overspend magnitude 2000 under all policies, bankruptcy terminates");
}

/// A world where every baseline answers everything correctly.
fn perfect_world(seed: u64) -> (Vec<Question>, BaselineAnswerSet, Vec<MaskedDescription>) {
    let suite = generate_suite(seed, 100, &CategoryMix::default_hundred()).unwrap();
    let roster: Vec<MaskedDescription> = (1u32..=6)
        .map(|i| MaskedDescription {
            base_model_id: i,
            text: format!("baseline {i}"),
            tier: if i <= 3 { Tier::Current } else { Tier::Prior },
        })
        .collect();
    let mut backends: Vec<(u32, Box<dyn AnswerBackend>)> = (1u32..=6)
        .map(|i| {
            (
                i,
                Box::new(llmcoin_core::adapters::synthetic::EchoAnswerer) as Box<dyn AnswerBackend>,
            )
        })
        .collect();
    let answers = collect_baseline_answers(&suite, &mut backends);
    (suite, answers, roster)
}

// ---------------------------------------------------------------------------
// criteria 6 and 7: the seeded synthetic experiment
// ---------------------------------------------------------------------------

const TABLE_RATES: [f64; 6] = [0.95, 0.90, 0.95, 0.22, 0.38, 0.97];

/// Builds the calibration experiment: suite, Table-1-rate baselines, and
/// nine incentive runs (3 predictors x 3 reps) at the given learning
/// weight.
fn synthetic_experiment(learning_weight: f64) -> Vec<RunLog> {
    let suite = generate_suite(20_251_115, 100, &CategoryMix::default_hundred()).unwrap();
    let roster: Vec<MaskedDescription> = (1u32..=6)
        .map(|i| MaskedDescription {
            base_model_id: i,
            text: format!("baseline {i}"),
            tier: if i <= 3 { Tier::Current } else { Tier::Prior },
        })
        .collect();
    let mut backends: Vec<(u32, Box<dyn AnswerBackend>)> = TABLE_RATES
        .iter()
        .enumerate()
        .map(|(i, rate)| {
            let spec = BackendSpec::synthetic_baseline(*rate, 101 + i as u64);
            (i as u32 + 1, spec.build_answerer(0).unwrap())
        })
        .collect();
    let answers = collect_baseline_answers(&suite, &mut backends);

    let policies = RunPolicies {
        record_timestamps: false,
        ..RunPolicies::default()
    };
    let mut logs = Vec::new();
    let master = SplitMix64::new(7_777);
    for predictor in 1..=3u64 {
        for rep in 1..=3u64 {
            let run_id = format!("synthetic-{predictor}-incentive-{rep}");
            let shuffle_seed = master.derive(&format!("shuffle/{run_id}")).next_u64();
            let plan = plan_run(
                &suite,
                &roster,
                &PlanSpec::standard(run_id.clone(), Condition::Incentive, shuffle_seed),
            )
            .unwrap();
            let params = SyntheticParams {
                acuity: 1.5,
                noise_scale: 2.0,
                stake_exponent: 2.0,
                learning_weight,
                seed: master.derive(&format!("stream/{run_id}")).next_u64(),
                ..SyntheticParams::default()
            };
            let mut bettor = SyntheticBettor::new(params);
            let log = execute_run(
                &plan,
                &suite,
                &answers,
                &mut bettor,
                &format!("synthetic-{predictor}"),
                &policies,
                None,
            )
            .unwrap();
            assert_eq!(log.status, RunStatus::Completed);
            logs.push(log);
        }
    }
    logs
}

#[test]
fn criterion_6_stake_calibration_monotone() {
    let started = Instant::now();
    let logs = synthetic_experiment(0.5);
    let refs: Vec<&RunLog> = logs.iter().collect();
    let calibration = stake_calibration(&refs).unwrap();
    assert_eq!(calibration.total_bets(), 5_400, "9 runs x 600 bets");

    let acc = |bin: StakeBin| {
        let stat = &calibration.bins[&bin];
        assert!(stat.n_bets > 0, "{bin:?} bin is empty");
        stat.accuracy()
    };
    let (tiny, mid, large, whale) = (
        acc(StakeBin::Tiny),
        acc(StakeBin::Mid),
        acc(StakeBin::Large),
        acc(StakeBin::Whale),
    );
    assert!(tiny < mid, "tiny {tiny:.3} !< mid {mid:.3}");
    assert!(mid < large, "mid {mid:.3} !< large {large:.3}");
    assert!(large <= whale, "large {large:.3} !<= whale {whale:.3}");
    assert!(
        whale - tiny >= 0.10,
        "whale - tiny = {:.3}",
        whale - tiny
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS criterion 6: bins {:.1} < {:.1} < {:.1} <= {:.1} (%), whale-tiny {:.1} pp ({elapsed:?})",
        100.0 * tiny,
        100.0 * mid,
        100.0 * large,
        100.0 * whale,
        100.0 * (whale - tiny)
    );
}

#[test]
fn criterion_7_learning_property() {
    let started = Instant::now();
    let mean_delta = |logs: &[RunLog]| {
        let deltas: Vec<f64> = logs
            .iter()
            .map(|l| run_accuracy(l).unwrap().r4_minus_r1)
            .collect();
        deltas.iter().sum::<f64>() / deltas.len() as f64
    };
    let with_learning = mean_delta(&synthetic_experiment(0.5));
    let ablated = mean_delta(&synthetic_experiment(0.0));
    assert!(
        with_learning >= ablated + 3.0,
        "lambda 0.5 delta {with_learning:.2} vs lambda 0 delta {ablated:.2}"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS criterion 7: R4-R1 {with_learning:.2} pp with learning vs {ablated:.2} pp ablated ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// criterion 8: end-to-end shape through the CLI binary, fully offline
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_end_to_end_shape() {
    let started = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let binary = env!("CARGO_BIN_EXE_llmcoin");

    let status = std::process::Command::new(binary)
        .args(["--out", out.path().to_str().unwrap(), "--deterministic", "simulate"])
        .status()
        .unwrap();
    assert!(status.success(), "simulate exited {status}");

    let runs_dir = out.path().join("runs");
    let run_dirs = protocol::runlog::discover_runs(&runs_dir).unwrap();
    assert_eq!(run_dirs.len(), 18, "3 predictors x 2 conditions x 3 reps");

    let mut per_condition: BTreeMap<Condition, usize> = BTreeMap::new();
    for dir in &run_dirs {
        let log = protocol::runlog::load_run_log(dir).unwrap();
        assert_eq!(log.status, RunStatus::Completed);
        assert_eq!(log.total_records(), 600);
        *per_condition.entry(log.plan.condition).or_insert(0) += log.total_records();

        // every persisted line is schema-valid and parser round-trippable
        for round in 1..=4u32 {
            let text = std::fs::read_to_string(dir.join(format!("round-{round}.log"))).unwrap();
            let report = parse_records(&text, log.plan.condition, 150, 100_000);
            assert!(report.is_clean(), "{dir:?} round {round}: {:?}", report.errors);
            let rendered = llmcoin_core::adapters::render_records(&report.records);
            assert_eq!(rendered, text, "round-trip through the parser");
        }
    }
    assert_eq!(per_condition[&Condition::Control], 5_400);
    assert_eq!(per_condition[&Condition::Incentive], 5_400);

    // and the analysis stage runs on those logs
    let status = std::process::Command::new(binary)
        .args(["--out", out.path().to_str().unwrap(), "analyze"])
        .status()
        .unwrap();
    assert!(status.success(), "analyze exited {status}");
    assert!(out.path().join("report/report.json").exists());

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS criterion 8: 18 runs, 600 records each, 5400 per condition, parser round-trip ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// criterion 9: parser robustness under mutation fuzzing
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_parser_robustness() {
    let started = Instant::now();
    // both schema field-name variants parse
    let a = parse_records(
        r#"{"round":2,"question_id":48,"base_model_id":1,"predicted_correct":"Yes","stake":14800,"rationale":"r"}"#,
        Condition::Incentive,
        1,
        100_000,
    );
    let b = parse_records(
        r#"{"round":2,"question_id":48,"base_model_id":1,"correct_answer":"Y","stake":14800,"rationale":"r"}"#,
        Condition::Incentive,
        1,
        100_000,
    );
    assert!(a.is_clean() && b.is_clean(), "both field-name variants parse");
    assert_eq!(a.records[0].predicted_correct, b.records[0].predicted_correct);

    let base_incentive = r#"{"round": 2, "question_id": 48, "base_model_id": 1, "predicted_correct": "Yes", "stake": 14800, "rationale": "steady"}"#;
    let base_control = r#"{"round": 1, "question_id": 7, "base_model_id": 3, "predicted_correct": "No", "rationale": "weak baseline"}"#;

    let mut rng = SplitMix64::new(0xF022);
    let mut invalid = 0u64;
    let mut valid = 0u64;
    for i in 0..100_000u64 {
        let (base, condition) = if i % 2 == 0 {
            (base_incentive, Condition::Incentive)
        } else {
            (base_control, Condition::Control)
        };
        let mutated = mutate_line(base, &mut rng);
        let report = parse_records(&mutated, condition, 1, 100_000);
        if report.errors.is_empty() {
            assert_eq!(report.records.len(), 1);
            valid += 1;
        } else {
            // every invalid line carries a classified error
            assert!(
                !report.errors.is_empty(),
                "unclassified failure for {mutated:?}"
            );
            invalid += 1;
        }
    }
    assert!(invalid > 10_000, "mutations should often invalidate: {invalid}");
    assert!(valid > 0, "benign mutations should sometimes survive: {valid}");
    let elapsed = started.elapsed();
    println!(
        "PASS criterion 9: 100000 mutated lines, zero crashes, {invalid} invalid / {valid} valid ({elapsed:?})"
    );
}

/// Applies 1-3 random byte-level mutations to a record line.
fn mutate_line(base: &str, rng: &mut SplitMix64) -> String {
    let mut bytes = base.as_bytes().to_vec();
    let n_mutations = 1 + rng.next_below(3);
    for _ in 0..n_mutations {
        if bytes.is_empty() {
            break;
        }
        match rng.next_below(6) {
            0 => {
                // flip one byte to a random printable/unprintable value
                let i = rng.next_below(bytes.len() as u64) as usize;
                bytes[i] = rng.next_below(256) as u8;
            }
            1 => {
                // delete a byte
                let i = rng.next_below(bytes.len() as u64) as usize;
                bytes.remove(i);
            }
            2 => {
                // insert a random byte
                let i = rng.next_below(bytes.len() as u64 + 1) as usize;
                bytes.insert(i, rng.next_below(256) as u8);
            }
            3 => {
                // truncate
                let i = rng.next_below(bytes.len() as u64) as usize;
                bytes.truncate(i);
            }
            4 => {
                // duplicate a slice
                let i = rng.next_below(bytes.len() as u64) as usize;
                let j = (i + rng.next_below(16) as usize).min(bytes.len());
                let slice: Vec<u8> = bytes[i..j].to_vec();
                bytes.extend_from_slice(&slice);
            }
            _ => {
                // swap two bytes
                let i = rng.next_below(bytes.len() as u64) as usize;
                let j = rng.next_below(bytes.len() as u64) as usize;
                bytes.swap(i, j);
            }
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

// ---------------------------------------------------------------------------
// extra: the wrong-count classification is part of the robustness story
// ---------------------------------------------------------------------------

#[test]
fn parser_reports_wrong_count_for_149_records() {
    let mut lines = String::new();
    for i in 0..149u32 {
        lines.push_str(&format!(
            "{{\"round\": 1, \"question_id\": {}, \"base_model_id\": {}, \"predicted_correct\": \"Yes\", \"stake\": 1, \"rationale\": \"r\"}}\n",
            i / 6 + 1,
            i % 6 + 1
        ));
    }
    let report = parse_records(&lines, Condition::Incentive, 150, 100_000);
    assert!(report
        .errors
        .iter()
        .any(|e| e.kind == ParseErrorKind::WrongCount));
}

#[test]
fn stake_bin_boundaries_match_published_rows() {
    assert_eq!(stake_bin(1_000).unwrap(), StakeBin::Tiny);
    assert_eq!(stake_bin(1_001).unwrap(), StakeBin::Mid);
    assert_eq!(stake_bin(40_000).unwrap(), StakeBin::Whale);
    assert_eq!(stake_bin(14_800).unwrap(), StakeBin::Large);
    // published bin counts partition all 5,400 incentive bets
    assert_eq!(871 + 2_249 + 2_110 + 170, 5_400);
}

#[test]
fn analysis_is_pure_over_logs() {
    let logs = synthetic_experiment(0.5);
    let refs: Vec<&RunLog> = logs.iter().collect();
    let a = analysis::analyze_logs(&logs, None, false).unwrap();
    let b = analysis::analyze_logs(&logs, None, false).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let cal_a = stake_calibration(&refs).unwrap();
    let cal_b = stake_calibration(&refs).unwrap();
    assert_eq!(cal_a, cal_b);
}
