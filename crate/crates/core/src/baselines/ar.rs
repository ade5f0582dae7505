use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::solve_spd;
use crate::error::{Error, Result};

const RIDGE: f64 = 1e-8;

/// Autoregression on the `d`-times differenced series, fitted by least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ARModel {
    pub p: usize,
    pub d: usize,
    /// `coefficients[j]` multiplies lag `j + 1`.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

fn difference(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn check_orders(p: usize, d: usize) -> Result<()> {
    if p == 0 || d > 2 {
        return Err(Error::Parameter(format!("AR orders need p >= 1 and d <= 2, got p={p} d={d}")));
    }
    Ok(())
}

pub fn ar_fit(series: &[f64], p: usize, d: usize) -> Result<ARModel> {
    check_orders(p, d)?;
    if series.len() <= p + d + 1 {
        return Err(Error::Data(format!(
            "AR({p}) with d={d} needs more than {} values, got {}",
            p + d + 1,
            series.len()
        )));
    }
    let mut z = series.to_vec();
    for _ in 0..d {
        z = difference(&z);
    }
    let rows = z.len() - p;
    let cols = p + 1;
    let mut x = DMatrix::<f64>::zeros(rows, cols);
    let mut y = DMatrix::<f64>::zeros(rows, 1);
    for r in 0..rows {
        let t = r + p;
        x[(r, 0)] = 1.0;
        for j in 0..p {
            x[(r, j + 1)] = z[t - 1 - j];
        }
        y[(r, 0)] = z[t];
    }
    let xt = x.transpose();
    let beta = solve_spd(&xt * &x, &xt * &y, RIDGE, "AR fit")?;
    Ok(ARModel {
        p,
        d,
        intercept: beta[(0, 0)],
        coefficients: (1..cols).map(|j| beta[(j, 0)]).collect(),
    })
}

/// Forecast `horizon` steps past the end of `history`, feeding predictions
/// back as lags, then undo the differencing.
pub fn ar_predict(model: &ARModel, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
    check_orders(model.p, model.d)?;
    if history.len() < model.p + model.d {
        return Err(Error::Data(format!(
            "AR forecast needs {} history values, got {}",
            model.p + model.d,
            history.len()
        )));
    }
    // last value at each differencing level 0..d
    let mut levels = vec![history.to_vec()];
    for k in 0..model.d {
        let next = difference(&levels[k]);
        levels.push(next);
    }
    let mut lasts: Vec<f64> = levels[..model.d].iter().map(|l| *l.last().unwrap()).collect();
    let mut z = levels.pop().unwrap();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let n = z.len();
        let mut next = model.intercept;
        for (j, c) in model.coefficients.iter().enumerate() {
            next += c * z[n - 1 - j];
        }
        z.push(next);
        let mut v = next;
        for last in lasts.iter_mut().rev() {
            v += *last;
            *last = v;
        }
        out.push(v);
    }
    Ok(out)
}

/// Fit on `series[..origin]` and forecast `horizon` steps from `origin`.
pub fn ar_forecast_at(series: &[f64], origin: usize, horizon: usize, p: usize, d: usize) -> Result<Vec<f64>> {
    if origin > series.len() {
        return Err(Error::Parameter(format!("forecast origin {origin} outside history")));
    }
    let model = ar_fit(&series[..origin], p, d)?;
    ar_predict(&model, &series[..origin], horizon)
}
