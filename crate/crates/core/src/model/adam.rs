//! Adam with bias-corrected moments, keyed by parameter name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub step: u64,
    m: BTreeMap<String, Vec<f64>>,
    v: BTreeMap<String, Vec<f64>>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Advance the step counter. Call once per optimizer step, before
/// [`adam_update`] on each parameter.
pub fn adam_begin_step(state: &mut AdamState) {
    state.step += 1;
}

/// Update one named parameter in place.
pub fn adam_update(
    name: &str,
    param: &mut [f64],
    grad: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
) {
    let t = state.step.max(1) as i32;
    let m = state.m.entry(name.to_string()).or_insert_with(|| vec![0.0; param.len()]);
    let v = state.v.entry(name.to_string()).or_insert_with(|| vec![0.0; param.len()]);
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        param[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

/// One full step over a map of parameters and matching gradients.
pub fn adam_step(
    params: &mut BTreeMap<String, Vec<f64>>,
    grads: &BTreeMap<String, Vec<f64>>,
    state: &mut AdamState,
    cfg: &AdamConfig,
) {
    adam_begin_step(state);
    for (name, p) in params.iter_mut() {
        if let Some(g) = grads.get(name) {
            adam_update(name, p, g, state, cfg);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: f64) -> BTreeMap<String, Vec<f64>> {
        BTreeMap::from([("w".to_string(), vec![w])])
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = single(1.5);
        let mut s = AdamState::new();
        for _ in 0..5 {
            adam_step(&mut p, &single(0.0), &mut s, &AdamConfig::default());
        }
        assert_eq!(p["w"][0], 1.5);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient() {
        let cfg = AdamConfig { lr: 0.01, ..AdamConfig::default() };
        for g in [3.0, -0.002, 250.0] {
            let mut p = single(0.0);
            adam_step(&mut p, &single(g), &mut AdamState::new(), &cfg);
            let expected = -g.signum() * cfg.lr;
            assert!((p["w"][0] - expected).abs() < 1e-6 * cfg.lr.max(1.0), "{g}: {}", p["w"][0]);
        }
    }

    #[test]
    fn converges_on_quadratic() {
        let cfg = AdamConfig { lr: 0.1, ..AdamConfig::default() };
        let mut p = single(0.0);
        let mut s = AdamState::new();
        for _ in 0..200 {
            let g = 2.0 * (p["w"][0] - 3.0);
            adam_step(&mut p, &single(g), &mut s, &cfg);
        }
        assert!((p["w"][0] - 3.0).abs() < 0.05, "{}", p["w"][0]);
    }
}
