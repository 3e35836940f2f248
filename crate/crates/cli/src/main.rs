//! `llmcoin`: run prediction-market forecasting experiments over LLM
//! correctness, end to end: generate a verified question suite, collect
//! baseline answers, run Control/Incentive predictor rounds with an
//! externally enforced coin ledger, and reproduce the full statistical
//! analysis from the logs.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{CmdError, Ctx};
use config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "llmcoin",
    version,
    about = "Prediction-market experiments over LLM correctness"
)]
struct Cli {
    /// Experiment config (TOML). Defaults to the built-in synthetic setup.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the suite seed and the experiment master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Exclude wall-clock timestamps so outputs are byte-reproducible.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Parallel runs (run/simulate).
    #[arg(long, global = true)]
    jobs: Option<u32>,

    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,

    /// Output directory (default: `out`, or the config's output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the question suite with oracle-verified answers.
    Generate,
    /// Collect and grade baseline answers for every (baseline, question).
    Answer {
        /// Answer only the first N questions (endpoint smoke test).
        #[arg(long, value_name = "N")]
        smoke: Option<usize>,
    },
    /// Execute the configured predictor runs (may use live endpoints).
    Run,
    /// Execute the experiment fully offline with synthetic backends.
    Simulate,
    /// Compute all tables and statistics from run logs.
    Analyze {
        /// Directory of run logs (default: <out>/runs).
        #[arg(long, value_name = "DIR")]
        logs: Option<PathBuf>,
        /// Run-level summary fixture instead of logs (statistics only).
        #[arg(long, value_name = "PATH")]
        summaries: Option<PathBuf>,
        /// Baseline answer file for the difficulty histogram.
        #[arg(long, value_name = "PATH")]
        answers: Option<PathBuf>,
        /// Also export each table as CSV.
        #[arg(long)]
        csv: bool,
        /// Include aborted/bankrupt runs in the tables.
        #[arg(long)]
        include_incomplete: bool,
    },
    /// Re-render a previously computed report.
    Report {
        /// report.json path (default: <out>/report/report.json).
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
    /// Re-execute deterministically and verify logs are byte-identical.
    Replay,
}

fn build_ctx(cli: &Cli) -> Result<Ctx, CmdError> {
    let (config, base_dir) = match &cli.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path).map_err(CmdError::Config)?;
            let base = path
                .parent()
                .map(|p| p.to_path_buf())
                .unwrap_or_else(|| PathBuf::from("."));
            (cfg, base)
        }
        None => (ExperimentConfig::default_synthetic(), PathBuf::from(".")),
    };
    let mut config = config;
    if let Some(seed) = cli.seed {
        config.suite.seed = seed;
        config.experiment.master_seed = seed;
    }
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| config::resolve(&base_dir, &config.output.dir));
    let jobs = cli.jobs.unwrap_or(config.output.jobs);
    Ok(Ctx {
        config,
        base_dir,
        out_dir,
        force: cli.force,
        deterministic: cli.deterministic,
        jobs,
    })
}

fn dispatch(cli: Cli) -> Result<(), CmdError> {
    let ctx = build_ctx(&cli)?;
    match cli.command {
        Command::Generate => commands::cmd_generate(&ctx),
        Command::Answer { smoke } => commands::cmd_answer(&ctx, smoke),
        Command::Run => commands::cmd_run(&ctx, false),
        Command::Simulate => commands::cmd_run(&ctx, true),
        Command::Analyze {
            logs,
            summaries,
            answers,
            csv,
            include_incomplete,
        } => commands::cmd_analyze(&ctx, logs, summaries, answers, csv, include_incomplete),
        Command::Report { report, csv } => commands::cmd_report(&ctx, report, csv),
        Command::Replay => commands::cmd_replay(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
