//! Error as a function of forecast horizon for the Transformer and the
//! baselines, written as CSV to stdout.

use parkcast::eval::{
    forecast_ar, forecast_ha, forecast_nlinear, forecast_transformer, horizon_sweep, max_zone_lots, zone_windows,
};
use parkcast::experiment::{prepare, ExperimentConfig, Inputs};
use parkcast::model::train;
use parkcast::preprocess::FeatureSetting;
use parkcast::synth::generate;

fn main() -> anyhow::Result<()> {
    let overrides: Vec<String> = [
        "synth.n_days=14",
        "preprocess.window=144",
        "preprocess.train_stride=24",
        "model.patch_len=12",
        "model.d_model=16",
        "model.d_ff=32",
        "training.epochs=5",
    ]
    .map(String::from)
    .to_vec();
    let cfg = ExperimentConfig::from_toml_str("", &overrides)?;
    let city = generate(&cfg.synth)?;
    let prepared = prepare(&Inputs::from_city(&city), &cfg)?;
    let (frames, split) = (&prepared.frames, &prepared.stage.split);
    let h = cfg.harness();
    let lots = max_zone_lots(frames);
    let setting = FeatureSetting::AllLotsWithDemand;
    let train_set = zone_windows(frames, &split.train_zones, setting, h.window, h.horizon, h.train_stride, lots)?;
    let test_set = zone_windows(frames, &split.test_zones, setting, h.window, h.horizon, h.test_stride, lots)?;

    let model = train(&train_set, h.model_for(setting, lots), &h.train)?;
    let runs = [
        forecast_transformer(&model, &test_set)?,
        forecast_nlinear(&train_set, &test_set, &h.nlinear)?,
        forecast_ha(frames, &test_set)?,
        forecast_ar(frames, &test_set, h.ar_p, h.ar_d)?,
    ];
    let refs: Vec<_> = runs.iter().collect();
    let curves = horizon_sweep(&refs, &cfg.evaluation.horizons, h.mape_eps)?;
    curves.write_csv(std::io::stdout().lock())?;
    Ok(())
}
