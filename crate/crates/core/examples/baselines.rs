//! Historical average, AR and NLinear on the held-out zones.

use parkcast::eval::{forecast_ar, forecast_ha, forecast_nlinear, max_zone_lots, zone_windows};
use parkcast::experiment::{prepare, ExperimentConfig, Inputs};
use parkcast::preprocess::FeatureSetting;
use parkcast::synth::generate;

fn main() -> anyhow::Result<()> {
    let cfg = ExperimentConfig::from_toml_str("", &["synth.n_days=21".into()])?;
    let city = generate(&cfg.synth)?;
    let prepared = prepare(&Inputs::from_city(&city), &cfg)?;
    let (frames, split) = (&prepared.frames, &prepared.stage.split);
    let h = cfg.harness();
    let lots = max_zone_lots(frames);
    let setting = FeatureSetting::TargetOnly;
    let train_set = zone_windows(frames, &split.train_zones, setting, h.window, h.horizon, h.train_stride, lots)?;
    let test_set = zone_windows(frames, &split.test_zones, setting, h.window, h.horizon, h.test_stride, lots)?;

    let runs = [
        forecast_ha(frames, &test_set)?,
        forecast_ar(frames, &test_set, h.ar_p, h.ar_d)?,
        forecast_nlinear(&train_set, &test_set, &h.nlinear)?,
    ];
    println!("{} test windows of {} steps", test_set.len(), h.horizon);
    for f in &runs {
        let r = f.report(h.mape_eps)?;
        let mape = r.mape.map_or("undefined".into(), |v| format!("{v:.2}%"));
        println!("{:<8} MSE {:.6}  MAE {:.6}  MAPE {mape}", f.model, r.mse, r.mae);
    }
    Ok(())
}
