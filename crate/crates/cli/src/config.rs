//! Experiment configuration: a flat TOML file with sections for the suite,
//! the experiment constants, baselines, and predictors. Every knob has a
//! default mirroring the standard protocol (4 x 25 questions, 6 baselines,
//! 1M bankroll, 1-100,000 stakes), so a bare `simulate` works with no
//! config file at all.

use anyhow::{bail, Context};
use llmcoin_core::adapters::{BackendKind, BackendSpec, StakeRule, SyntheticParams};
use llmcoin_core::market::ViolationPolicy;
use llmcoin_core::protocol::{Condition, MaskedDescription};
use llmcoin_core::questionbank::{Category, CategoryMix};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Baseline answer rates used by the default synthetic baselines.
pub const DEFAULT_BASELINE_RATES: [f64; 6] = [0.95, 0.90, 0.95, 0.22, 0.38, 0.97];

const DEFAULT_ROSTER_JSON: &str = include_str!("../../../fixtures/roster.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSection {
    #[serde(default = "default_suite_seed")]
    pub seed: u64,
    #[serde(default = "default_count")]
    pub count: u32,
    /// Explicit per-category counts; omitted categories contribute zero.
    /// When absent, the default mix scaled to `count` applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<BTreeMap<Category, u32>>,
}

fn default_suite_seed() -> u64 {
    20_251_115
}
fn default_count() -> u32 {
    100
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            seed: default_suite_seed(),
            count: default_count(),
            mix: None,
        }
    }
}

impl SuiteSection {
    pub fn category_mix(&self) -> CategoryMix {
        match &self.mix {
            Some(m) => CategoryMix(m.clone()),
            None => CategoryMix::scaled_default(self.count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_rounds")]
    pub rounds: u32,
    #[serde(default = "default_qpr")]
    pub questions_per_round: u32,
    #[serde(default = "default_reps")]
    pub repetitions: u32,
    #[serde(default = "default_conditions")]
    pub conditions: Vec<Condition>,
    #[serde(default = "default_bankroll")]
    pub initial_bankroll: u64,
    #[serde(default = "default_cap")]
    pub per_bet_cap: u64,
    #[serde(default = "default_policy")]
    pub violation_policy: ViolationPolicy,
    #[serde(default = "default_retry_budget")]
    pub retry_budget: u32,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    /// Explicit per-run shuffle seeds keyed by run id; anything not listed
    /// derives from the master seed.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub shuffle_seeds: BTreeMap<String, u64>,
    /// Roster fixture path; the built-in roster applies when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roster_path: Option<PathBuf>,
}

fn default_rounds() -> u32 {
    4
}
fn default_qpr() -> u32 {
    25
}
fn default_reps() -> u32 {
    3
}
fn default_conditions() -> Vec<Condition> {
    vec![Condition::Control, Condition::Incentive]
}
fn default_bankroll() -> u64 {
    1_000_000
}
fn default_cap() -> u64 {
    100_000
}
fn default_policy() -> ViolationPolicy {
    ViolationPolicy::Flag
}
fn default_retry_budget() -> u32 {
    2
}
fn default_master_seed() -> u64 {
    7_777
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            rounds: default_rounds(),
            questions_per_round: default_qpr(),
            repetitions: default_reps(),
            conditions: default_conditions(),
            initial_bankroll: default_bankroll(),
            per_bet_cap: default_cap(),
            violation_policy: default_policy(),
            retry_budget: default_retry_budget(),
            master_seed: default_master_seed(),
            shuffle_seeds: BTreeMap::new(),
            roster_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: u32,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_jobs() -> u32 {
    4
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            jobs: default_jobs(),
        }
    }
}

/// One backend, flattened for TOML friendliness. Which fields matter
/// depends on `kind`; see the schema notes in the README.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env_var: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_path: Option<PathBuf>,
    /// Baseline-side synthetic: probability of a correct answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    // predictor-side synthetic bettor knobs
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acuity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stake_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stake_rule: Option<StakeRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_weight: Option<f64>,
}

impl Default for BackendEntry {
    fn default() -> Self {
        Self {
            label: None,
            kind: BackendKind::Synthetic,
            endpoint_url: None,
            model_name: None,
            auth_env_var: None,
            temperature: None,
            max_output_tokens: None,
            timeout_secs: None,
            fixture_path: None,
            answer_rate: None,
            seed: None,
            acuity: None,
            noise_scale: None,
            stake_exponent: None,
            stake_rule: None,
            learning_weight: None,
        }
    }
}

impl BackendEntry {
    pub fn synthetic_predictor(label: &str, seed: u64) -> Self {
        Self {
            label: Some(label.to_string()),
            kind: BackendKind::Synthetic,
            seed: Some(seed),
            ..Self::default()
        }
    }

    pub fn synthetic_baseline(rate: f64, seed: u64) -> Self {
        Self {
            kind: BackendKind::Synthetic,
            answer_rate: Some(rate),
            seed: Some(seed),
            ..Self::default()
        }
    }

    fn synthetic_params(&self) -> SyntheticParams {
        let defaults = SyntheticParams::default();
        SyntheticParams {
            acuity: self.acuity.unwrap_or(defaults.acuity),
            noise_scale: self.noise_scale.unwrap_or(defaults.noise_scale),
            stake_exponent: self.stake_exponent.unwrap_or(defaults.stake_exponent),
            stake_rule: self.stake_rule.unwrap_or(defaults.stake_rule),
            learning_weight: self.learning_weight.unwrap_or(defaults.learning_weight),
            seed: self.seed.unwrap_or(0),
        }
    }

    /// Converts to the core backend spec, as a predictor.
    pub fn predictor_spec(&self) -> BackendSpec {
        let mut spec = self.base_spec();
        if self.kind == BackendKind::Synthetic {
            spec.synthetic = Some(self.synthetic_params());
        }
        spec
    }

    /// Converts to the core backend spec, as a baseline answer source.
    pub fn baseline_spec(&self) -> BackendSpec {
        let mut spec = self.base_spec();
        spec.answer_rate = self.answer_rate;
        if self.kind == BackendKind::Synthetic {
            spec.synthetic = Some(SyntheticParams {
                seed: self.seed.unwrap_or(0),
                ..SyntheticParams::default()
            });
        }
        spec
    }

    fn base_spec(&self) -> BackendSpec {
        BackendSpec {
            kind: self.kind,
            endpoint_url: self.endpoint_url.clone(),
            model_name: self.model_name.clone(),
            auth_env_var: self.auth_env_var.clone(),
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
            timeout_secs: self.timeout_secs,
            fixture_path: self.fixture_path.clone(),
            synthetic: None,
            answer_rate: None,
        }
    }

    pub fn display_label(&self, fallback: &str) -> String {
        self.label.clone().unwrap_or_else(|| fallback.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub suite: SuiteSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub baselines: Vec<BackendEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predictors: Vec<BackendEntry>,
}

impl ExperimentConfig {
    /// The zero-config experiment: three synthetic predictors, six
    /// synthetic baselines at the default rates, both conditions.
    pub fn default_synthetic() -> Self {
        let mut cfg = Self::default();
        cfg.normalize();
        cfg
    }

    /// Fills in defaulted baselines/predictors so a saved config spells
    /// out exactly what will run.
    pub fn normalize(&mut self) {
        if self.baselines.is_empty() {
            self.baselines = DEFAULT_BASELINE_RATES
                .iter()
                .enumerate()
                .map(|(i, rate)| BackendEntry::synthetic_baseline(*rate, 101 + i as u64))
                .collect();
        }
        if self.predictors.is_empty() {
            self.predictors = vec![
                BackendEntry::synthetic_predictor("synthetic-a", 1),
                BackendEntry::synthetic_predictor("synthetic-b", 2),
                BackendEntry::synthetic_predictor("synthetic-c", 3),
            ];
        }
        for (i, p) in self.predictors.iter_mut().enumerate() {
            if p.label.is_none() {
                p.label = Some(format!("predictor-{}", (b'a' + (i as u8 % 26)) as char));
            }
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.normalize();
        cfg.validate(path.parent().unwrap_or(Path::new(".")))?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let text = toml::to_string_pretty(self).context("serializing config")?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    /// Structural checks: counts line up, referenced paths exist, backend
    /// specs are complete for their kind.
    pub fn validate(&self, base_dir: &Path) -> anyhow::Result<()> {
        let suite_size = self.experiment.rounds * self.experiment.questions_per_round;
        if self.suite.count != suite_size {
            bail!(
                "suite.count = {} but experiment shape is {} rounds x {} questions = {}",
                self.suite.count,
                self.experiment.rounds,
                self.experiment.questions_per_round,
                suite_size
            );
        }
        if let Some(mix) = &self.suite.mix {
            let total: u32 = mix.values().sum();
            if total != self.suite.count {
                bail!(
                    "suite.mix sums to {total}, expected suite.count = {}",
                    self.suite.count
                );
            }
        }
        if self.experiment.conditions.is_empty() {
            bail!("experiment.conditions must not be empty");
        }
        if self.baselines.is_empty() || self.predictors.is_empty() {
            bail!("config must define baselines and predictors (or rely on defaults)");
        }
        for (i, b) in self.baselines.iter().enumerate() {
            b.baseline_spec()
                .validate_for_baseline()
                .with_context(|| format!("baselines[{i}]"))?;
            if let Some(p) = &b.fixture_path {
                let full = resolve(base_dir, p);
                if !full.exists() {
                    bail!("baselines[{i}].fixture_path {} does not exist", full.display());
                }
            }
        }
        for (i, p) in self.predictors.iter().enumerate() {
            p.predictor_spec()
                .validate_for_predictor()
                .with_context(|| format!("predictors[{i}]"))?;
            if let Some(fp) = &p.fixture_path {
                let full = resolve(base_dir, fp);
                if !full.exists() {
                    bail!("predictors[{i}].fixture_path {} does not exist", full.display());
                }
            }
        }
        if let Some(rp) = &self.experiment.roster_path {
            let full = resolve(base_dir, rp);
            if !full.exists() {
                bail!("experiment.roster_path {} does not exist", full.display());
            }
        }
        Ok(())
    }

    /// Loads the roster fixture (or the built-in default roster).
    pub fn roster(&self, base_dir: &Path) -> anyhow::Result<Vec<MaskedDescription>> {
        let text = match &self.experiment.roster_path {
            Some(p) => {
                let full = resolve(base_dir, p);
                std::fs::read_to_string(&full)
                    .with_context(|| format!("reading roster {}", full.display()))?
            }
            None => DEFAULT_ROSTER_JSON.to_string(),
        };
        let roster: Vec<MaskedDescription> = serde_json::from_str(&text).context("roster JSON")?;
        Ok(roster)
    }
}

pub fn resolve(base_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}
