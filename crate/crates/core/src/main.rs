use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kronsample::bench::{self, ExperimentConfig};
use kronsample::Error;

#[derive(Parser)]
#[command(name = "kronsample", version, about = "Kronecker-structured sparse sampling design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write results.csv and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Compare greedy designs with the exhaustive optimum and print a JSON summary.
    OracleCompare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            let cfg = load(&config, seed)?;
            if cfg.long_running {
                eprintln!("note: {} is a long-running configuration", cfg.label());
            }
            let result = bench::run_to_dir(&cfg, &out, threads)?;
            eprintln!("{} rows written to {}", result.rows.len(), out.join("results.csv").display());
        }
        Command::OracleCompare { config, seed } => {
            let cfg = load(&config, seed)?;
            let cmp = bench::run_oracle_compare(&cfg)?;
            for s in &cmp.summaries {
                eprintln!(
                    "{:?}: {} instances, min ratio {:.4}, median {:.4}, {} below 1/2, {} FP-bound violations",
                    s.core, s.instances, s.min_ratio, s.median_ratio, s.below_half, s.fp_bound_violations
                );
            }
            println!("{}", serde_json::to_string_pretty(&cmp.summaries)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
