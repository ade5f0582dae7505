//! Train a small Transformer on the training zones and score it on the
//! held-out zones.

use parkcast::eval::{count_macs, count_params, forecast_transformer, max_zone_lots, zone_windows};
use parkcast::experiment::{prepare, ExperimentConfig, Inputs};
use parkcast::model::train;
use parkcast::preprocess::FeatureSetting;
use parkcast::synth::generate;

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let overrides: Vec<String> = [
        "synth.n_days=14",
        "preprocess.window=144",
        "preprocess.horizon=36",
        "evaluation.horizons=[1,6,36]",
        "preprocess.train_stride=12",
        "model.patch_len=6",
        "model.d_model=16",
        "model.d_ff=32",
        "training.epochs=8",
    ]
    .map(String::from)
    .to_vec();
    let cfg = ExperimentConfig::from_toml_str("", &overrides)?;
    let city = generate(&cfg.synth)?;
    let prepared = prepare(&Inputs::from_city(&city), &cfg)?;
    let (frames, split) = (&prepared.frames, &prepared.stage.split);

    let h = cfg.harness();
    let setting = FeatureSetting::AllLotsWithDemand;
    let lots = max_zone_lots(frames);
    let train_set = zone_windows(frames, &split.train_zones, setting, h.window, h.horizon, h.train_stride, lots)?;
    let test_set = zone_windows(frames, &split.test_zones, setting, h.window, h.horizon, h.test_stride, lots)?;
    let model_cfg = h.model_for(setting, lots);
    println!(
        "{} training windows, {} test windows, {} params, {} MACs per window",
        train_set.len(),
        test_set.len(),
        count_params(&model_cfg),
        count_macs(&model_cfg)
    );

    let model = train(&train_set, model_cfg, &h.train)?;
    for (epoch, loss) in model.train_loss_curve.iter().enumerate() {
        println!("epoch {:>2}  train MSE {loss:.6}", epoch + 1);
    }
    let report = forecast_transformer(&model, &test_set)?.report(h.mape_eps)?;
    println!("test MSE {:.6}  MAE {:.6}  MAPE {:?}", report.mse, report.mae, report.mape);
    Ok(())
}
