use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use parkcast::experiment::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "parkcast", version, about = "Parking availability forecasting experiments")]
struct Cli {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override any config key, e.g. `--set training.epochs=5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate a synthetic city into the data directory.
    Synth,
    /// Cluster lots into zones and split zones into train/test.
    Cluster,
    /// Build per-zone availability + demand frames.
    Fuse,
    /// Train the Transformer on the training zones.
    Train,
    /// Score the trained model and the baselines on the test zones.
    Evaluate,
    /// Run the model x feature-setting ablation grid.
    Ablate,
    /// Per-horizon error curves.
    Sweep,
}

fn run(cli: &Cli) -> parkcast::Result<()> {
    let mut overrides = cli.set.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(out) = &cli.out {
        overrides.push(format!("paths.out_dir={:?}", out.display().to_string()));
    }
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    let written = match cli.command {
        Command::Synth => experiment::cmd_synth(&cfg)?,
        Command::Cluster => experiment::cmd_cluster(&cfg)?,
        Command::Fuse => experiment::cmd_fuse(&cfg)?,
        Command::Train => experiment::cmd_train(&cfg)?,
        Command::Evaluate => experiment::cmd_evaluate(&cfg)?,
        Command::Ablate => experiment::cmd_ablate(&cfg)?,
        Command::Sweep => experiment::cmd_sweep(&cfg)?,
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
