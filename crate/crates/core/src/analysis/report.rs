//! Plain-text table rendering and CSV export for analysis reports, plus the
//! run-summary fixture format (run-level accuracies fed straight into the
//! statistics engine).

use super::{AnalysisReport, RunAccuracy, StakeCalibration};
use crate::market::{rational_to_percent, StakeBin};
use crate::protocol::{format_coins, Condition, Tier};
use crate::stats::{round_half_up, TestResult};
use std::fmt::Write as _;
use std::path::Path;

/// On-disk schema for run-level summaries (Table A1 shape): percentages per
/// round plus overall and R4-R1.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunSummary {
    pub run: String,
    pub predictor: String,
    pub condition: Condition,
    pub rounds: Vec<f64>,
    pub overall: f64,
    pub r4_minus_r1: f64,
}

impl From<RunSummary> for RunAccuracy {
    fn from(s: RunSummary) -> Self {
        RunAccuracy {
            run_id: s.run,
            predictor: s.predictor,
            condition: s.condition,
            per_round: s.rounds,
            overall: s.overall,
            r4_minus_r1: s.r4_minus_r1,
        }
    }
}

pub fn load_run_summaries(path: &Path) -> Result<Vec<RunSummary>, std::io::Error> {
    let data = std::fs::read_to_string(path)?;
    serde_json::from_str(&data).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

fn fmt1(v: f64) -> String {
    format!("{:.1}", round_half_up(v, 1))
}

fn fmt_signed1(v: f64) -> String {
    let r = round_half_up(v, 1) + 0.0; // -0.0 prints as 0.0
    if r > 0.0 {
        format!("+{r:.1}")
    } else {
        format!("{r:.1}")
    }
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for (i, h) in header.iter().enumerate() {
        let _ = write!(out, "{:<w$}  ", h, w = widths[i]);
    }
    out.push('\n');
    let total: usize = widths.iter().sum::<usize>() + 2 * widths.len();
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            let _ = write!(out, "{:<w$}  ", cell, w = widths[i]);
        }
        out.push('\n');
    }
    out
}

fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let escape = |s: &str| {
        if s.contains(',') || s.contains('"') {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter().map(|c| escape(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn condition_name(c: Condition) -> &'static str {
    match c {
        Condition::Control => "Control",
        Condition::Incentive => "Incentive",
    }
}

fn tier_name(t: Tier) -> &'static str {
    match t {
        Tier::Current => "Current-generation",
        Tier::Prior => "Prior-generation",
    }
}

fn tests_rows(report: &AnalysisReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let mut push = |label: &str, t: &TestResult| {
        rows.push(vec![
            label.to_string(),
            format!("t({}) = {:.2}", t.degrees_of_freedom, t.t_statistic),
            format!("{:.3}", t.p_two_tailed),
            format!("d = {:.2}", t.cohens_d),
        ]);
    };
    if let Some(t) = &report.h1_overall {
        push("H1: Overall accuracy (Incentive vs Control)", t);
    }
    if let Some(t) = &report.h2_learning {
        push("H2: Learning improvement (R4 - R1)", t);
    }
    rows
}

fn aggregate_rows(report: &AnalysisReport) -> Vec<Vec<String>> {
    report
        .tables
        .aggregates
        .iter()
        .map(|a| {
            vec![
                a.predictor.clone(),
                condition_name(a.condition).to_string(),
                fmt1(a.accuracy),
                fmt_signed1(a.r4_minus_r1),
            ]
        })
        .collect()
}

fn round_rows(report: &AnalysisReport) -> Vec<Vec<String>> {
    report
        .tables
        .rounds
        .iter()
        .map(|r| {
            let control = r.by_condition.get(&Condition::Control);
            let incentive = r.by_condition.get(&Condition::Incentive);
            let diff = match (control, incentive) {
                (Some(c), Some(i)) => fmt_signed1(i - c),
                _ => "-".to_string(),
            };
            vec![
                r.round.to_string(),
                control.map(|v| fmt1(*v)).unwrap_or_else(|| "-".into()),
                incentive.map(|v| fmt1(*v)).unwrap_or_else(|| "-".into()),
                diff,
            ]
        })
        .collect()
}

fn per_run_rows(report: &AnalysisReport) -> Vec<Vec<String>> {
    report
        .tables
        .per_run
        .iter()
        .map(|r| {
            let mut row = vec![r.run_id.clone(), condition_name(r.condition).to_string()];
            for v in &r.per_round {
                row.push(fmt1(*v));
            }
            row.push(fmt1(r.overall));
            row.push(fmt_signed1(r.r4_minus_r1));
            row
        })
        .collect()
}

fn stake_rows(cal: &StakeCalibration) -> Vec<Vec<String>> {
    StakeBin::ALL
        .iter()
        .map(|bin| {
            let stat = &cal.bins[bin];
            vec![
                bin.label().to_string(),
                stat.n_bets.to_string(),
                stat.n_correct.to_string(),
                if stat.n_bets == 0 {
                    "-".to_string()
                } else {
                    fmt1(100.0 * stat.accuracy())
                },
            ]
        })
        .collect()
}

fn bankroll_rows(report: &AnalysisReport) -> Vec<Vec<String>> {
    let Some(bank) = &report.bankroll else {
        return Vec::new();
    };
    bank.rows
        .iter()
        .map(|r| {
            let mut row = vec![r.run_id.clone()];
            for b in &r.balance_after {
                row.push(format_coins(*b));
            }
            row.push(format!("{}%", rational_to_percent(r.roi)));
            row
        })
        .collect()
}

fn yes_rate_rows(report: &AnalysisReport) -> (Vec<String>, Vec<Vec<String>>) {
    let mut baseline_ids: Vec<u32> = report
        .yes_rates
        .iter()
        .flat_map(|r| r.per_baseline.keys().copied())
        .collect();
    baseline_ids.sort_unstable();
    baseline_ids.dedup();
    let mut header = vec!["Run".to_string(), "Cond.".to_string()];
    header.extend(baseline_ids.iter().map(|b| format!("B{b}")));
    header.push("Avg".to_string());
    let rows = report
        .yes_rates
        .iter()
        .map(|r| {
            let mut row = vec![r.run_id.clone(), condition_name(r.condition).to_string()];
            for bid in &baseline_ids {
                row.push(
                    r.per_baseline
                        .get(bid)
                        .map(|v| fmt1(*v))
                        .unwrap_or_else(|| "-".into()),
                );
            }
            row.push(fmt1(r.average));
            row
        })
        .collect();
    (header, rows)
}

fn tier_rows(report: &AnalysisReport) -> Vec<Vec<String>> {
    report
        .tier_accuracy
        .iter()
        .map(|r| {
            vec![
                tier_name(r.tier).to_string(),
                r.by_condition
                    .get(&Condition::Control)
                    .map(|v| fmt1(*v))
                    .unwrap_or_else(|| "-".into()),
                r.by_condition
                    .get(&Condition::Incentive)
                    .map(|v| fmt1(*v))
                    .unwrap_or_else(|| "-".into()),
                r.difference_pp
                    .map(fmt_signed1)
                    .unwrap_or_else(|| "-".into()),
            ]
        })
        .collect()
}

/// Renders the whole report as aligned plain-text tables.
pub fn render_text(report: &AnalysisReport) -> String {
    let mut out = String::new();

    let tests = tests_rows(report);
    if !tests.is_empty() {
        out.push_str("Statistical test results\n");
        out.push_str(&table(
            &["Analysis", "Statistic", "p-value", "Effect size"],
            &tests,
        ));
        out.push('\n');
    }

    out.push_str("Prediction accuracy and learning by condition\n");
    out.push_str(&table(
        &["Predictor", "Condition", "Accuracy (%)", "R4-R1 (pp)"],
        &aggregate_rows(report),
    ));
    out.push('\n');

    out.push_str("Accuracy by round and condition\n");
    out.push_str(&table(
        &["Round", "Control (%)", "Incentive (%)", "Difference (pp)"],
        &round_rows(report),
    ));
    if !report.round_slopes.is_empty() {
        for (condition, slope) in &report.round_slopes {
            let _ = writeln!(
                out,
                "OLS slope, {}: {:.2} pp/round",
                condition_name(*condition),
                slope
            );
        }
    }
    out.push('\n');

    if let Some(cal) = &report.stake_calibration {
        out.push_str("Stake size and prediction accuracy\n");
        out.push_str(&table(
            &["Stake range", "n bets", "Correct", "Accuracy (%)"],
            &stake_rows(cal),
        ));
        out.push('\n');
    }

    if let Some(bank) = &report.bankroll {
        out.push_str("Bankroll dynamics across rounds\n");
        let max_rounds = bank.rows.iter().map(|r| r.balance_after.len()).max().unwrap_or(0);
        let mut header: Vec<String> = vec!["Run".into()];
        for k in 1..=max_rounds {
            header.push(format!("After R{k}"));
        }
        header.push("ROI".into());
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        out.push_str(&table(&header_refs, &bankroll_rows(report)));
        let _ = writeln!(
            out,
            "Mean ROI: {}%",
            rational_to_percent(bank.mean_roi)
        );
        out.push('\n');
    }

    if !report.tier_accuracy.is_empty() {
        out.push_str("Prediction accuracy by baseline tier and condition\n");
        out.push_str(&table(
            &["Baseline tier", "Control (%)", "Incentive (%)", "Difference (pp)"],
            &tier_rows(report),
        ));
        out.push('\n');
    }

    if !report.yes_rates.is_empty() {
        out.push_str("Yes-rate by run and baseline\n");
        let (header, rows) = yes_rate_rows(report);
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        out.push_str(&table(&header_refs, &rows));
        out.push('\n');
    }

    if let Some(hist) = &report.difficulty_histogram {
        out.push_str("Item difficulty: questions solved by k baselines\n");
        let rows: Vec<Vec<String>> = hist
            .iter()
            .enumerate()
            .map(|(k, n)| vec![k.to_string(), n.to_string()])
            .collect();
        out.push_str(&table(&["k", "questions"], &rows));
        out.push('\n');
    }

    out.push_str("Per-run accuracy\n");
    let n_rounds = report
        .tables
        .per_run
        .first()
        .map(|r| r.per_round.len())
        .unwrap_or(0);
    let mut header: Vec<String> = vec!["Run".into(), "Condition".into()];
    for k in 1..=n_rounds {
        header.push(format!("R{k} (%)"));
    }
    header.push("Overall (%)".into());
    header.push("R4-R1 (pp)".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.push_str(&table(&header_refs, &per_run_rows(report)));

    for note in &report.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

/// Writes one CSV file per table into `dir`; returns the file names written.
pub fn write_csvs(report: &AnalysisReport, dir: &Path) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, header: &[&str], rows: &[Vec<String>]| -> std::io::Result<()> {
        std::fs::write(dir.join(name), csv(header, rows))?;
        written.push(name.to_string());
        Ok(())
    };

    emit(
        "tests.csv",
        &["analysis", "statistic", "p_value", "effect_size"],
        &tests_rows(report),
    )?;
    emit(
        "accuracy_by_condition.csv",
        &["predictor", "condition", "accuracy_pct", "r4_minus_r1_pp"],
        &aggregate_rows(report),
    )?;
    emit(
        "accuracy_by_round.csv",
        &["round", "control_pct", "incentive_pct", "difference_pp"],
        &round_rows(report),
    )?;
    if let Some(cal) = &report.stake_calibration {
        emit(
            "stake_calibration.csv",
            &["stake_range", "n_bets", "n_correct", "accuracy_pct"],
            &stake_rows(cal),
        )?;
    }
    if report.bankroll.is_some() {
        let rows = bankroll_rows(report);
        let max_rounds = rows.iter().map(|r| r.len().saturating_sub(2)).max().unwrap_or(0);
        let mut header: Vec<String> = vec!["run".into()];
        for k in 1..=max_rounds {
            header.push(format!("after_r{k}"));
        }
        header.push("roi_pct".into());
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        emit("bankroll.csv", &header_refs, &rows)?;
    }
    if !report.tier_accuracy.is_empty() {
        emit(
            "tier_accuracy.csv",
            &["tier", "control_pct", "incentive_pct", "difference_pp"],
            &tier_rows(report),
        )?;
    }
    if !report.yes_rates.is_empty() {
        let (header, rows) = yes_rate_rows(report);
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        emit("yes_rates.csv", &header_refs, &rows)?;
    }
    if let Some(hist) = &report.difficulty_histogram {
        let rows: Vec<Vec<String>> = hist
            .iter()
            .enumerate()
            .map(|(k, n)| vec![k.to_string(), n.to_string()])
            .collect();
        emit("difficulty.csv", &["k", "questions"], &rows)?;
    }
    let rows = per_run_rows(report);
    let n_rounds = report
        .tables
        .per_run
        .first()
        .map(|r| r.per_round.len())
        .unwrap_or(0);
    let mut header: Vec<String> = vec!["run".into(), "condition".into()];
    for k in 1..=n_rounds {
        header.push(format!("r{k}_pct"));
    }
    header.push("overall_pct".into());
    header.push("r4_minus_r1_pp".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    emit("per_run.csv", &header_refs, &rows)?;

    Ok(written)
}
