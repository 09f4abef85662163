//! `qkdsim`: run seeded QKD scenarios from a TOML config, or run the
//! acceptance battery.
//!
//! Exit codes: 0 ok, 1 I/O failure, 2 config error, 3 criterion failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use qkd_core::scenario::{run_batch, BatchResult, ScenarioConfig};
use qkd_core::{quantum, verify, QkdError};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CRITERION: u8 = 3;

#[derive(Parser)]
#[command(name = "qkdsim", version, about = "Seeded QKD protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of repetitions; overrides `repetitions`.
        #[arg(long)]
        reps: Option<usize>,
        /// Summary CSV path; stdout when neither this nor `output.csv` is set.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Public transcript as JSON lines.
        #[arg(long)]
        dump_transcript: Option<PathBuf>,
        /// Accounting and attack report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the acceptance battery.
    Verify {
        /// Run a single criterion.
        #[arg(long, value_name = "NAME")]
        only: Option<String>,
        /// Snap Born-rule probabilities to 0/1 (negative control).
        #[arg(long, hide = true)]
        mutate_born_rule: bool,
    },
}

/// Failures that map to distinct exit codes.
enum Failure {
    Config(String),
    Io(anyhow::Error),
    Criteria(Vec<&'static str>),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, seed, reps, csv, dump_transcript, report } => {
            run(&config, seed, reps, csv, dump_transcript, report)
        }
        Command::Verify { only, mutate_born_rule } => verify_battery(only.as_deref(), mutate_born_rule),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Criteria(names)) => {
            eprintln!("failed criteria: {}", names.join(", "));
            ExitCode::from(EXIT_CRITERION)
        }
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {}", path.display(), e)))
}

fn run(
    path: &Path,
    seed: Option<u64>,
    reps: Option<usize>,
    csv: Option<PathBuf>,
    transcript: Option<PathBuf>,
    report: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut config = load_config(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(r) = reps {
        config.repetitions = r;
    }
    let csv = csv.or_else(|| config.output.csv.clone().map(PathBuf::from));
    let transcript = transcript.or_else(|| config.output.transcript.clone().map(PathBuf::from));
    let report = report.or_else(|| config.output.report.clone().map(PathBuf::from));

    let batch = run_batch(&config).map_err(|e| match e {
        QkdError::InvalidParam { .. } => Failure::Config(e.to_string()),
        other => Failure::Io(other.into()),
    })?;

    match &csv {
        Some(p) => write(p, &batch.csv())?,
        None => print!("{}", batch.csv()),
    }
    if let Some(p) = &transcript {
        write(p, &batch.transcript_jsonl())?;
    }
    if let Some(p) = &report {
        write(p, &report_json(&batch))?;
    }
    print_summary(&batch);
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn report_json(batch: &BatchResult) -> String {
    let value = serde_json::json!({
        "config": batch.config,
        "mean_qber": batch.mean_qber(),
        "accounting": batch.accounting(),
        "attack": batch.attack(),
    });
    let mut s = serde_json::to_string_pretty(&value).expect("plain data");
    s.push('\n');
    s
}

fn print_summary(batch: &BatchResult) {
    let c = &batch.config;
    let aborted = batch.repetitions.iter().filter(|r| r.expansion.aborted()).count();
    eprintln!(
        "{} eve={} m={} N={} reps={} seed={}: mean qber {:.4}, aborted {}/{}",
        c.scheme.name(),
        c.eve.name(),
        c.m,
        c.rounds,
        c.repetitions,
        c.seed,
        batch.mean_qber(),
        aborted,
        batch.repetitions.len()
    );
}

fn verify_battery(only: Option<&str>, mutate: bool) -> Result<(), Failure> {
    quantum::set_born_rule_mutation(mutate);
    let Some(results) = verify::run(only) else {
        let known: Vec<_> = verify::names().collect();
        return Err(Failure::Config(format!(
            "unknown criterion `{}`; expected one of: {}",
            only.unwrap_or_default(),
            known.join(", ")
        )));
    };
    let total: f64 = results.iter().map(|r| r.elapsed.as_secs_f64()).sum();
    for r in &results {
        println!("{}", r.line());
    }
    println!("{} criteria, {:.2}s", results.len(), total);
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Criteria(failed))
    }
}
