use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::Grid;
use crate::time::Timestamp;

/// Slot key: (day of week with Monday = 0, time-of-day slot index).
pub type Slot = (u32, u32);

/// Historical average over (weekday, time-of-day slot).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HAModel {
    pub step: i64,
    pub slot_means: BTreeMap<Slot, f64>,
    pub slot_counts: BTreeMap<Slot, usize>,
    /// Weekday-agnostic means per time-of-day slot, used when a weekday slot is unseen.
    pub time_of_day_means: BTreeMap<u32, f64>,
    pub global_mean: f64,
}

fn slot_of(t: Timestamp, step: i64) -> Slot {
    (t.weekday_index(), (t.seconds_of_day() / step) as u32)
}

/// Mean of sorted values taken as offsets from the smallest, so the result
/// does not depend on input order and a constant input is reproduced exactly.
fn stable_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let base = values[0];
    base + values.iter().map(|v| v - base).sum::<f64>() / values.len() as f64
}

pub fn ha_fit(timestamps: &[Timestamp], values: &[f64], step: i64) -> Result<HAModel> {
    if timestamps.len() != values.len() {
        return Err(Error::Parameter("timestamps and values differ in length".into()));
    }
    if values.is_empty() {
        return Err(Error::Data("historical average needs at least one training value".into()));
    }
    if step <= 0 {
        return Err(Error::Parameter("slot step must be positive".into()));
    }
    let mut by_slot: BTreeMap<Slot, Vec<f64>> = BTreeMap::new();
    for (&t, &v) in timestamps.iter().zip(values) {
        by_slot.entry(slot_of(t, step)).or_default().push(v);
    }
    let mut by_tod: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (&(_, tod), vs) in &by_slot {
        by_tod.entry(tod).or_default().extend_from_slice(vs);
    }
    let mut all = values.to_vec();
    Ok(HAModel {
        step,
        slot_counts: by_slot.iter().map(|(k, v)| (*k, v.len())).collect(),
        slot_means: by_slot.into_iter().map(|(k, mut v)| (k, stable_mean(&mut v))).collect(),
        time_of_day_means: by_tod.into_iter().map(|(k, mut v)| (k, stable_mean(&mut v))).collect(),
        global_mean: stable_mean(&mut all),
    })
}

pub fn ha_predict(model: &HAModel, timestamps: &[Timestamp]) -> Vec<f64> {
    timestamps
        .iter()
        .map(|&t| {
            let slot = slot_of(t, model.step);
            model
                .slot_means
                .get(&slot)
                .or_else(|| model.time_of_day_means.get(&slot.1))
                .copied()
                .unwrap_or(model.global_mean)
        })
        .collect()
}

/// Fit on `series[..origin]` and forecast `horizon` steps from `origin`.
pub fn ha_forecast_at(series: &[f64], grid: &Grid, origin: usize, horizon: usize) -> Result<Vec<f64>> {
    if origin == 0 || origin > series.len() {
        return Err(Error::Parameter(format!("forecast origin {origin} outside history")));
    }
    let ts: Vec<Timestamp> = (0..origin).map(|i| grid.instant(i)).collect();
    let model = ha_fit(&ts, &series[..origin], grid.step)?;
    let future: Vec<Timestamp> = (origin..origin + horizon).map(|i| grid.instant(i)).collect();
    Ok(ha_predict(&model, &future))
}
