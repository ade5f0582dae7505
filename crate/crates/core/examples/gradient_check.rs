//! Compare reverse-mode gradients of a tiny Transformer with central
//! differences, parameter by parameter.

use parkcast::eval::mse;
use parkcast::model::{CalendarFeature, ModelConfig, TrainedModel};
use parkcast::preprocess::{FeatureSetting, WindowSample};
use parkcast::Timestamp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let cfg = ModelConfig {
        input_channels: 2,
        window: 8,
        horizon: 2,
        d_model: 8,
        n_heads: 2,
        n_layers: 1,
        d_ff: 16,
        calendar: vec![CalendarFeature::Hour],
        ..ModelConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sample = WindowSample {
        input: (0..16).map(|_| rng.random_range(0.0..1.0)).collect(),
        window: 8,
        channels: 2,
        input_start: Timestamp::from_ymd_hms(2021, 9, 6, 7, 0, 0),
        step: 600,
        target: vec![0.4, 0.6],
        target_lot: "P000".into(),
        zone_id: "Z00".into(),
        setting: FeatureSetting::AllLots,
        offset: 0,
    };
    let model = TrainedModel::init(cfg)?;
    let (_, grads) = model.loss_and_grads(&sample, None)?;
    let delta = 1e-4;
    let mut probe = model.clone();
    for (name, analytic) in &grads {
        let mut worst = 0.0f64;
        for i in 0..analytic.len() {
            let orig = probe.parameters[name].data[i];
            let mut loss_at = |v: f64| -> anyhow::Result<f64> {
                probe.parameters.get_mut(name).unwrap().data[i] = v;
                Ok(mse(&probe.forward(&sample)?, &sample.target)?)
            };
            let numeric = (loss_at(orig + delta)? - loss_at(orig - delta)?) / (2.0 * delta);
            loss_at(orig)?;
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-7);
            worst = worst.max(rel);
        }
        println!("{name:<24} {:>4} entries  worst relative error {worst:.2e}", analytic.len());
    }
    Ok(())
}
