use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rome_cli::config::load_config;
use rome_cli::{cmd_ablate_alpha, cmd_evaluate, cmd_fit_em, cmd_fit_moe, cmd_simulate, exit_code};

/// Robust mixture ensembles for regression: simulation, fitting and
/// worst-group evaluation.
#[derive(Parser)]
#[command(name = "rome", version, about)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. --set em.g=4 or --set io.out_dir="run1".
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicate the synthetic benchmark: pooled regression vs the
    /// robustly aggregated linear mixture.
    Simulate,
    /// Fit the linear mixture on a dataset, one run per seed.
    FitEm,
    /// Train the neural mixture model roles across seeds.
    FitMoe,
    /// Score checkpointed models on the test split with subgroup
    /// breakdowns and significance tests.
    Evaluate,
    /// Sweep the average/worst-group trade-off for both mixture variants.
    AblateAlpha,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(cli.config.as_deref(), &cli.sets) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    let result = match cli.command {
        Command::Simulate => cmd_simulate(&cfg),
        Command::FitEm => cmd_fit_em(&cfg),
        Command::FitMoe => cmd_fit_moe(&cfg),
        Command::Evaluate => cmd_evaluate(&cfg),
        Command::AblateAlpha => cmd_ablate_alpha(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
