use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::solve_spd;
use crate::error::{Error, Result};
use crate::preprocess::WindowSample;

/// Linear map on last-value-anchored windows:
/// `predict(x) = (x - x_L) W + b + x_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NLinearModel {
    pub window: usize,
    pub horizon: usize,
    /// Row-major `[window x horizon]`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NLinearConfig {
    /// Ridge penalty, relative to the largest diagonal entry of the Gram matrix.
    pub ridge: f64,
}

impl Default for NLinearConfig {
    fn default() -> Self {
        Self { ridge: 1e-6 }
    }
}

impl NLinearModel {
    pub fn zeros(window: usize, horizon: usize) -> Self {
        Self { window, horizon, weight: vec![0.0; window * horizon], bias: vec![0.0; horizon] }
    }
}

pub fn nlinear_predict(model: &NLinearModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.window {
        return Err(Error::Config(format!(
            "NLinear expects a {}-step window, got {}",
            model.window,
            x.len()
        )));
    }
    let last = x[model.window - 1];
    let mut out = model.bias.clone();
    for (i, &xi) in x.iter().enumerate() {
        let z = xi - last;
        let row = &model.weight[i * model.horizon..(i + 1) * model.horizon];
        for (o, w) in out.iter_mut().zip(row) {
            *o += z * w;
        }
    }
    for o in &mut out {
        *o += last;
    }
    Ok(out)
}

/// Closed-form ridge least squares on the anchored target-lot histories.
pub fn nlinear_fit(samples: &[WindowSample], cfg: &NLinearConfig) -> Result<NLinearModel> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Data("NLinear needs at least one training window".into()))?;
    let (l, h) = (first.window, first.horizon());
    if samples.iter().any(|s| s.window != l || s.horizon() != h) {
        return Err(Error::Config("training windows differ in length".into()));
    }
    let n = samples.len();
    let mut a = DMatrix::<f64>::zeros(n, l + 1);
    let mut y = DMatrix::<f64>::zeros(n, h);
    for (r, s) in samples.iter().enumerate() {
        let hist = s.target_history();
        let last = hist[l - 1];
        for (i, v) in hist.iter().enumerate() {
            a[(r, i)] = v - last;
        }
        a[(r, l)] = 1.0;
        for (k, v) in s.target.iter().enumerate() {
            y[(r, k)] = v - last;
        }
    }
    let at = a.transpose();
    let mut gram = &at * &a;
    let scale = (0..=l).map(|i| gram[(i, i)]).fold(0.0, f64::max).max(1.0);
    for i in 0..l {
        gram[(i, i)] += cfg.ridge * scale;
    }
    let beta = solve_spd(gram, &at * &y, cfg.ridge.max(1e-10), "NLinear fit")?;
    let mut model = NLinearModel::zeros(l, h);
    for i in 0..l {
        for k in 0..h {
            model.weight[i * h + k] = beta[(i, k)];
        }
    }
    for k in 0..h {
        model.bias[k] = beta[(l, k)];
    }
    Ok(model)
}
