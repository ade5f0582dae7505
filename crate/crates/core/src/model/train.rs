//! Mini-batch training of the Transformer forecaster.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_begin_step, adam_update, AdamConfig, AdamState};
use super::transformer::{DropoutRng, ModelConfig, TrainedModel};
use crate::error::{Error, Result};
use crate::preprocess::WindowSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 20, batch_size: 16, lr: 1e-3, seed: 0, beta1: 0.9, beta2: 0.999 }
    }
}

impl TrainConfig {
    fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, ..AdamConfig::default() }
    }
}

/// Train from a fresh initialization. The loss curve holds the mean
/// per-sample MSE of each epoch.
pub fn train(dataset: &[WindowSample], config: ModelConfig, tc: &TrainConfig) -> Result<TrainedModel> {
    let model = TrainedModel::init(config)?;
    train_from(model, dataset, tc)
}

/// Continue training an existing model.
pub fn train_from(
    mut model: TrainedModel,
    dataset: &[WindowSample],
    tc: &TrainConfig,
) -> Result<TrainedModel> {
    if dataset.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    if tc.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    if !(tc.lr > 0.0) {
        return Err(Error::Config(format!("learning rate {} must be positive", tc.lr)));
    }
    let adam = tc.adam();
    let mut state = AdamState::new();
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut draws = 0u64;

    for epoch in 0..tc.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(tc.batch_size) {
            let mut acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for &i in batch {
                let mut drop = DropoutRng::new(tc.seed ^ draws.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                draws += 1;
                let (loss, grads) = model.loss_and_grads(&dataset[i], Some(&mut drop))?;
                if !loss.is_finite() {
                    return Err(Error::Numerical(format!(
                        "loss became {loss} in epoch {} at lr {}; lower the learning rate",
                        epoch + 1,
                        tc.lr
                    )));
                }
                epoch_loss += loss;
                for (name, g) in grads {
                    match acc.get_mut(&name) {
                        Some(a) => a.iter_mut().zip(&g).for_each(|(a, g)| *a += g),
                        None => {
                            acc.insert(name, g);
                        }
                    }
                }
            }
            let inv = 1.0 / batch.len() as f64;
            adam_begin_step(&mut state);
            for (name, t) in model.parameters.iter_mut() {
                if let Some(g) = acc.get_mut(name) {
                    g.iter_mut().for_each(|v| *v *= inv);
                    adam_update(name, &mut t.data, g, &mut state, &adam);
                }
            }
        }
        let mean = epoch_loss / dataset.len() as f64;
        log::debug!("epoch {}: train mse {mean:.6}", epoch + 1);
        model.train_loss_curve.push(mean);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CalendarFeature;
    use crate::preprocess::FeatureSetting;
    use crate::time::Timestamp;

    fn tiny() -> ModelConfig {
        ModelConfig {
            input_channels: 1,
            window: 12,
            horizon: 3,
            d_model: 8,
            n_heads: 2,
            n_layers: 1,
            d_ff: 16,
            calendar: vec![CalendarFeature::Hour],
            seed: 1,
            ..ModelConfig::default()
        }
    }

    fn periodic_dataset(n: usize) -> Vec<WindowSample> {
        let series: Vec<f64> = (0..n + 15)
            .map(|t| 0.5 + 0.3 * (t as f64 * std::f64::consts::TAU / 12.0).sin())
            .collect();
        (0..n)
            .map(|o| WindowSample {
                input: series[o..o + 12].to_vec(),
                window: 12,
                channels: 1,
                input_start: Timestamp::from_ymd_hms(2021, 9, 1, 0, 0, 0).plus(o as i64 * 600),
                step: 600,
                target: series[o + 12..o + 15].to_vec(),
                target_lot: "L".into(),
                zone_id: "Z".into(),
                setting: FeatureSetting::TargetOnly,
                offset: o,
            })
            .collect()
    }

    #[test]
    fn constant_target_is_fit() {
        let mut data = periodic_dataset(16);
        for s in &mut data {
            s.target = vec![0.7; 3];
        }
        let tc = TrainConfig { epochs: 50, batch_size: 4, lr: 0.01, ..TrainConfig::default() };
        let m = train(&data, tiny(), &tc).unwrap();
        let last = *m.train_loss_curve.last().unwrap();
        assert!(last < 1e-3, "final mse {last}");
    }

    #[test]
    fn identical_seeds_give_identical_curves() {
        let data = periodic_dataset(10);
        let tc = TrainConfig { epochs: 3, batch_size: 3, lr: 0.01, ..TrainConfig::default() };
        let a = train(&data, tiny(), &tc).unwrap();
        let b = train(&data, tiny(), &tc).unwrap();
        let bits = |m: &TrainedModel| m.train_loss_curve.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.parameters, b.parameters);
    }

    #[test]
    fn loss_falls_on_periodic_data() {
        let data = periodic_dataset(24);
        let tc = TrainConfig { epochs: 20, batch_size: 4, lr: 0.005, ..TrainConfig::default() };
        let m = train(&data, tiny(), &tc).unwrap();
        assert!(m.train_loss_curve[19] < m.train_loss_curve[0], "{:?}", m.train_loss_curve);
    }

    #[test]
    fn divergence_aborts_with_guidance() {
        let data = periodic_dataset(4);
        let tc = TrainConfig { epochs: 1, lr: f64::NAN, ..TrainConfig::default() };
        assert!(matches!(train(&data, tiny(), &tc), Err(Error::Config(_))));
        let mut bad = data.clone();
        bad[0].target[0] = f64::NAN;
        let tc = TrainConfig { epochs: 1, ..TrainConfig::default() };
        match train(&bad, tiny(), &tc) {
            Err(Error::Numerical(msg)) => assert!(msg.contains("learning rate")),
            other => panic!("expected numerical abort, got {other:?}"),
        }
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(train(&[], tiny(), &TrainConfig::default()).is_err());
    }
}
