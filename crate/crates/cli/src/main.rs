use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use highway_core::harness::{cmd_compare, cmd_eval, cmd_train, HarnessError, RunConfig};
use highway_core::Algo;

#[derive(Debug, Parser)]
#[command(name = "highway", version, about = "Train and evaluate highway lane-change agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one agent and write metrics and checkpoints.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        algo: Option<Algo>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the greedy policy of a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train dqn and ddqn on each seed and write comparison tables.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, HarnessError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| HarnessError::Usage(format!("{}: {e}", p.display())))?;
            Ok(RunConfig::parse(&text)?)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Train { config, algo, seed, out } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(a) = algo {
                cfg.agent.algo = a;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let outcome = cmd_train(&cfg)?;
            let last = outcome.metrics.last().expect("at least one episode");
            println!(
                "trained {} for {} episodes (seed {}); last return {:.3}; output in {}",
                cfg.agent.algo,
                outcome.metrics.len(),
                cfg.seed,
                last.total_reward,
                cfg.out_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { checkpoint, episodes, seed } => {
            let summary = cmd_eval(&checkpoint, episodes, seed)?;
            print!("{}", summary.to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { config, seeds, out } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let outcome = cmd_compare(&cfg, &seeds)?;
            for row in &outcome.summary {
                println!(
                    "{}: {} ok, {} failed, mean final cumulative reward {:.3}",
                    row.algo, row.runs_ok, row.runs_failed, row.final_cumulative_reward
                );
            }
            let failures = outcome.failures();
            for f in &failures {
                eprintln!("run {} seed {} failed: {}", f.algo, f.seed, f.result.as_ref().unwrap_err());
            }
            Ok(if failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
