use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Targets with magnitude below this are left out of MAPE.
pub const DEFAULT_MAPE_EPS: f64 = 1e-3;

fn check(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(Error::Parameter(format!(
            "metrics need equal nonempty lengths, got {} and {}",
            pred.len(),
            actual.len()
        )));
    }
    Ok(())
}

pub fn mse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check(pred, actual)?;
    Ok(pred.iter().zip(actual).map(|(p, y)| (y - p) * (y - p)).sum::<f64>() / pred.len() as f64)
}

pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check(pred, actual)?;
    Ok(pred.iter().zip(actual).map(|(p, y)| (y - p).abs()).sum::<f64>() / pred.len() as f64)
}

/// MAPE in percent over terms with `|y| >= eps`, plus the number of skipped
/// terms. `None` when every term was skipped.
pub fn mape(pred: &[f64], actual: &[f64], eps: f64) -> Result<(Option<f64>, usize)> {
    check(pred, actual)?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for (p, y) in pred.iter().zip(actual) {
        if y.abs() < eps {
            continue;
        }
        sum += ((y - p) / y).abs();
        used += 1;
    }
    let skipped = pred.len() - used;
    Ok(((used > 0).then(|| 100.0 * sum / used as f64), skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotMetrics {
    pub mse: f64,
    pub mae: f64,
    pub mape: Option<f64>,
    pub n_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mse: f64,
    pub mae: f64,
    /// Percent; `null` when every target fell below the MAPE guard.
    pub mape: Option<f64>,
    pub n_terms: usize,
    pub mape_skipped: usize,
    pub per_lot: BTreeMap<String, LotMetrics>,
}

#[derive(Debug, Default, Clone, Copy)]
struct Sums {
    se: f64,
    ae: f64,
    ape: f64,
    n: usize,
    n_ape: usize,
}

impl Sums {
    fn add(&mut self, p: f64, y: f64, eps: f64) {
        let e = y - p;
        self.se += e * e;
        self.ae += e.abs();
        self.n += 1;
        if y.abs() >= eps {
            self.ape += (e / y).abs();
            self.n_ape += 1;
        }
    }

    fn mape(&self) -> Option<f64> {
        (self.n_ape > 0).then(|| 100.0 * self.ape / self.n_ape as f64)
    }
}

/// Accumulates forecasts lot by lot. Additions happen in caller order, so
/// a fixed iteration order gives identical reports.
#[derive(Debug, Clone)]
pub struct MetricsAccumulator {
    eps: f64,
    total: Sums,
    lots: BTreeMap<String, Sums>,
}

impl MetricsAccumulator {
    pub fn new(eps: f64) -> Self {
        Self { eps, total: Sums::default(), lots: BTreeMap::new() }
    }

    pub fn add(&mut self, lot: &str, pred: &[f64], actual: &[f64]) -> Result<()> {
        check(pred, actual)?;
        let lot = self.lots.entry(lot.to_string()).or_default();
        for (&p, &y) in pred.iter().zip(actual) {
            self.total.add(p, y, self.eps);
            lot.add(p, y, self.eps);
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.total.n == 0
    }

    pub fn finish(self) -> Result<MetricsReport> {
        let t = self.total;
        if t.n == 0 {
            return Err(Error::Data("no forecasts were scored".into()));
        }
        Ok(MetricsReport {
            mse: t.se / t.n as f64,
            mae: t.ae / t.n as f64,
            mape: t.mape(),
            n_terms: t.n,
            mape_skipped: t.n - t.n_ape,
            per_lot: self
                .lots
                .into_iter()
                .map(|(k, s)| {
                    let m = LotMetrics {
                        mse: s.se / s.n as f64,
                        mae: s.ae / s.n as f64,
                        mape: s.mape(),
                        n_terms: s.n,
                    };
                    (k, m)
                })
                .collect(),
        })
    }
}
