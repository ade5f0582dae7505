//! The model x feature-setting grid on a reduced city and model.

use parkcast::eval::run_ablation;
use parkcast::experiment::{prepare, ExperimentConfig, Inputs};
use parkcast::synth::generate;

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let overrides: Vec<String> = [
        "synth.n_days=14",
        "preprocess.window=144",
        "preprocess.horizon=36",
        "evaluation.horizons=[1,6,36]",
        "preprocess.train_stride=24",
        "model.patch_len=6",
        "model.d_model=16",
        "model.d_ff=32",
        "training.epochs=5",
    ]
    .map(String::from)
    .to_vec();
    let cfg = ExperimentConfig::from_toml_str("", &overrides)?;
    let city = generate(&cfg.synth)?;
    let prepared = prepare(&Inputs::from_city(&city), &cfg)?;
    let split = &prepared.stage.split;
    let outcome = run_ablation(&prepared.frames, &split.train_zones, &split.test_zones, &cfg.harness())?;
    print!("{}", outcome.table.to_text());
    Ok(())
}
