//! `rfcover`: batch exploration runs and verification suites.

mod config;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rfcover::Seed;

#[derive(Parser)]
#[command(name = "rfcover", version, about = "Reward-free exploration in Block MDPs")]
struct Cli {
    /// Overrides the seed in the config (run) or the suite seed (verify).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for independent runs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the run matrix of a TOML config and write a JSON report.
    Run { config: PathBuf },
    /// Run a verification suite; exits nonzero if any check fails.
    Verify {
        #[arg(value_enum)]
        suite: verify::Suite,
        /// Directory of model fixtures (JSON) to check instead of the shipped ones.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

const DEFAULT_VERIFY_SEED: u64 = 2024;

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    if cli.jobs == 0 {
        anyhow::bail!("--jobs must be positive");
    }
    match cli.command {
        Command::Run { config } => {
            let mut cfg = config::Config::load(&config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let report = run::run(cfg, cli.jobs)?;
            for g in &report.summary {
                println!(
                    "env {} {:?}: {}/{} covers, {} errors, max |Psi| {}",
                    g.env_index, g.algorithm, g.cover_passes, g.runs, g.errors, g.max_num_policies
                );
            }
            std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
            let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
            let path = cli.out.join(format!("{stem}.report.json"));
            std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            println!("{} runs, report written to {}", report.runs.len(), path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, fixtures } => {
            let seed = Seed(cli.seed.unwrap_or(DEFAULT_VERIFY_SEED));
            let outcomes = verify::run(suite, fixtures.as_deref(), seed)?;
            for o in &outcomes {
                println!("{}", o.line());
            }
            let failed = outcomes.iter().filter(|o| !o.pass).count();
            println!("{} checks, {failed} failed", outcomes.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
