//! `samp`: seeded S-AMP experiment sweeps, state-evolution traces and the
//! acceptance suite.
//!
//! Configuration layers, lowest to highest precedence: built-in defaults,
//! `--desk`, `--config FILE`, individual flags, `--set KEY=VALUE`.
//!
//! Exit codes: 0 success, 1 a run or check failed, 2 bad usage or config.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use samp_core::checks::{run_check, CRITERIA};
use samp_core::experiments::{build_spec, parse_config_text, run_experiment, run_se, se_csv, Assignment, ExperimentSpec};
use samp_core::scenario::SystemConfig;

#[derive(Parser)]
#[command(name = "samp", version, about = "Sequential AMP for grant-free massive random access")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo sweep and write the metrics CSV.
    Run(ConfigArgs),
    /// Compute state-evolution traces and write them as CSV.
    Se(ConfigArgs),
    /// Run acceptance criteria (all, or the listed numbers).
    Check {
        ids: Vec<u8>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Start from the desk-scale profile (N=500, L=125, T=10, 20 trials).
    #[arg(long)]
    desk: bool,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated algorithm list.
    #[arg(long)]
    algos: Option<String>,
    /// Values may be comma-separated lists; at most one key may sweep.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    pilot_len: Option<String>,
    #[arg(long)]
    tx_power_dbm: Option<String>,
    #[arg(long)]
    r0: Option<String>,
    /// Any config key, e.g. `--set n_adts=20`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// Failure class, mapped to the exit code.
enum Failure {
    Usage(String),
    Run(String),
}

impl ConfigArgs {
    fn spec(&self) -> Result<ExperimentSpec, Failure> {
        let base = if self.desk { SystemConfig::desk() } else { SystemConfig::default() };
        let mut assignments = Vec::new();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            assignments = parse_config_text(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        }
        let flag = |key: &str, value: String| Assignment {
            key: key.to_string(),
            value,
            line: None,
        };
        let flags = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("trials", self.trials.map(|v| v.to_string())),
            ("algorithms", self.algos.clone()),
            ("lambda", self.lambda.clone()),
            ("pilot_len", self.pilot_len.clone()),
            ("tx_power_dbm", self.tx_power_dbm.clone()),
            ("r0", self.r0.clone()),
        ];
        assignments.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| flag(k, v))));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            assignments.push(flag(k.trim(), v.trim().to_string()));
        }
        if let Some(out) = &self.out {
            assignments.push(flag("out", out.display().to_string()));
        }
        build_spec(base, &assignments).map_err(|e| Failure::Usage(e.to_string()))
    }
}

fn emit(out: Option<&Path>, csv: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, csv).map_err(|e| Failure::Run(format!("{}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run(args) => {
            let spec = args.spec()?;
            let out = run_experiment(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
            emit(spec.out.as_deref(), &out.to_csv())?;
            for (value, algo, msg) in &out.failures {
                eprintln!("{algo} at {}={value}: {msg}", spec.axis.key());
            }
            if out.has_failures() {
                return Err(Failure::Run("some runs failed; their rows are NaN".into()));
            }
            Ok(())
        }
        Command::Se(args) => {
            let spec = args.spec()?;
            let rows = run_se(&spec).map_err(|e| Failure::Run(e.to_string()))?;
            emit(spec.out.as_deref(), &se_csv(&rows))
        }
        Command::Check { ids } => {
            let ids: Vec<u8> = if ids.is_empty() { CRITERIA.iter().map(|(i, _)| *i).collect() } else { ids };
            let mut failed = 0;
            for id in ids {
                let outcome = run_check(id).ok_or_else(|| Failure::Usage(format!("no criterion {id}")))?;
                println!("{}", outcome.line());
                failed += usize::from(!outcome.passed);
            }
            if failed > 0 {
                return Err(Failure::Run(format!("{failed} criteria failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
