//! Analytic parameter and multiply-accumulate counts for the forecaster.
//!
//! Reference figures for the original (unpublished) configuration are
//! 0.9107 M parameters and 1.0644 G MACs; they are documentation only.

use serde::{Deserialize, Serialize};

use crate::model::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub params: u64,
    pub macs: u64,
    pub params_millions: f64,
    pub macs_billions: f64,
}

pub fn count_params(cfg: &ModelConfig) -> u64 {
    let d = cfg.d_model as u64;
    let dff = cfg.d_ff as u64;
    let f = cfg.calendar.len() as u64;
    let embed = cfg.token_width() as u64 * d + d;
    let calendar = 2 * f * d + d;
    let layer = 4 * d * d + 4 * d + 2 * d * dff + dff + d + 4 * d;
    let head = d * cfg.horizon as u64 + cfg.horizon as u64;
    embed + calendar + cfg.n_layers as u64 * layer + head
}

/// MACs of one forward pass over a `window`-step input.
pub fn count_macs_at(cfg: &ModelConfig, window: usize) -> u64 {
    let d = cfg.d_model as u64;
    let n = (window / cfg.patch_len) as u64;
    let embed = window as u64 * cfg.input_channels as u64 * d;
    let calendar = n * 2 * cfg.calendar.len() as u64 * d;
    let layer = 4 * n * d * d + 2 * n * n * d + 2 * n * d * cfg.d_ff as u64;
    embed + calendar + cfg.n_layers as u64 * layer + d * cfg.horizon as u64
}

pub fn count_macs(cfg: &ModelConfig) -> u64 {
    count_macs_at(cfg, cfg.window)
}

pub fn cost_report(cfg: &ModelConfig) -> CostReport {
    let params = count_params(cfg);
    let macs = count_macs(cfg);
    CostReport {
        params,
        macs,
        params_millions: params as f64 / 1e6,
        macs_billions: macs as f64 / 1e9,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CalendarFeature, TrainedModel};

    fn tiny() -> ModelConfig {
        ModelConfig {
            input_channels: 2,
            window: 8,
            horizon: 2,
            d_model: 8,
            n_heads: 2,
            n_layers: 1,
            d_ff: 16,
            calendar: vec![CalendarFeature::Hour],
            ..ModelConfig::default()
        }
    }

    #[test]
    fn tiny_config_by_hand() {
        // embed 2*8+8, calendar 2*8+8, layer 4*64+32 + 2*128+16+8 + 32, head 16+2
        let expected = 24 + 24 + (288 + 280 + 32) + 18;
        assert_eq!(count_params(&tiny()), expected);
        assert_eq!(TrainedModel::init(tiny()).unwrap().param_count() as u64, expected);
    }

    #[test]
    fn extra_layer_adds_one_block() {
        let one = count_params(&tiny());
        let two = count_params(&ModelConfig { n_layers: 2, ..tiny() });
        let three = count_params(&ModelConfig { n_layers: 3, ..tiny() });
        assert_eq!(three - two, two - one);
    }

    #[test]
    fn attention_term_is_quadratic_in_window() {
        let c = ModelConfig { window: 64, ..tiny() };
        let lin = |l: u64| l * 2 * 8 + l * 2 * 8 + 4 * l * 64 + 2 * l * 8 * 16;
        let quad = |l: u64| 2 * l * l * 8;
        for l in [64u64, 128, 256] {
            assert_eq!(count_macs_at(&c, l as usize), lin(l) + quad(l) + 16);
        }
    }
}
