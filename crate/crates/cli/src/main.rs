use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use randspace_cli::{fixtures, run, CliError, ExperimentConfig, Format};

#[derive(Parser)]
#[command(name = "randspace", version, about = "Run random-space kinematics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts and manifest.
    Run {
        #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
        config: Option<PathBuf>,
        #[arg(long)]
        fixture: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List built-in fixtures.
    Fixtures { filter: Option<String> },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::Run { config, fixture, seed, out, format, workers } => {
            let mut cfg = match (config, fixture) {
                (Some(path), _) => ExperimentConfig::load(&path)?,
                (None, Some(name)) => fixtures::load(&name)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            if let Some(f) = format {
                cfg.format = f;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            let manifest = run(&cfg)?;
            for c in &manifest.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("wrote {} artifacts to {}", manifest.artifacts.len() + 1, cfg.out.display());
            Ok(if manifest.passed() { 0 } else { 3 })
        }
        Command::Fixtures { filter } => {
            for f in fixtures::list(filter.as_deref()) {
                println!("{:<14} {}", f.name, f.headline);
            }
            Ok(0)
        }
        Command::Validate { config } => {
            ExperimentConfig::load(&config)?.validate()?;
            println!("ok");
            Ok(0)
        }
    }
}
