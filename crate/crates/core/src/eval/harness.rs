use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{MetricsAccumulator, MetricsReport};
use crate::baselines::{ar_forecast_at, ha_forecast_at, nlinear_fit, nlinear_predict, NLinearConfig};
use crate::error::{Error, Result};
use crate::model::{train, ModelConfig, TrainConfig, TrainedModel};
use crate::pcz::FeatureFrame;
use crate::preprocess::{make_windows, pad_lot_channels, FeatureSetting, WindowSample};

/// Everything the forecasting experiments need besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub window: usize,
    pub horizon: usize,
    pub train_stride: usize,
    pub test_stride: usize,
    /// Template for the Transformer; `input_channels`, `window` and
    /// `horizon` are filled in per feature setting.
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub nlinear: NLinearConfig,
    pub ar_p: usize,
    pub ar_d: usize,
    pub mape_eps: f64,
    pub settings: Vec<FeatureSetting>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            window: crate::preprocess::DEFAULT_WINDOW,
            horizon: crate::preprocess::DEFAULT_HORIZON,
            train_stride: 6,
            test_stride: 36,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            nlinear: NLinearConfig::default(),
            ar_p: 6,
            ar_d: 1,
            mape_eps: super::DEFAULT_MAPE_EPS,
            settings: FeatureSetting::ALL.to_vec(),
        }
    }
}

impl HarnessConfig {
    /// Model config for one feature setting on zones of up to `max_lots` lots.
    pub fn model_for(&self, setting: FeatureSetting, max_lots: usize) -> ModelConfig {
        ModelConfig {
            input_channels: setting.channels(max_lots),
            window: self.window,
            horizon: self.horizon,
            ..self.model.clone()
        }
    }
}

/// Largest zone size among `frames`.
pub fn max_zone_lots(frames: &[FeatureFrame]) -> usize {
    frames.iter().map(|f| f.lot_ids.len()).max().unwrap_or(0)
}

/// Windows for every lot of every listed zone, zones and lots in id order,
/// padded to `max_lots` lot channels.
pub fn zone_windows(
    frames: &[FeatureFrame],
    zones: &BTreeSet<String>,
    setting: FeatureSetting,
    window: usize,
    horizon: usize,
    stride: usize,
    max_lots: usize,
) -> Result<Vec<WindowSample>> {
    let mut ordered: Vec<&FeatureFrame> = frames.iter().filter(|f| zones.contains(&f.zone_id)).collect();
    ordered.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
    let mut out = Vec::new();
    for frame in ordered {
        let mut lots = frame.lot_ids.clone();
        lots.sort();
        for lot in &lots {
            for s in make_windows(frame, lot, window, horizon, stride, setting)? {
                out.push(pad_lot_channels(&s, max_lots)?);
            }
        }
    }
    Ok(out)
}

/// Point forecasts of one model over a fixed list of test windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecasts {
    pub model: String,
    pub setting: Option<FeatureSetting>,
    pub lots: Vec<String>,
    pub predictions: Vec<Vec<f64>>,
    pub actuals: Vec<Vec<f64>>,
}

impl Forecasts {
    fn collect(
        model: &str,
        setting: Option<FeatureSetting>,
        samples: &[WindowSample],
        mut f: impl FnMut(&WindowSample) -> Result<Vec<f64>>,
    ) -> Result<Self> {
        let mut out = Self {
            model: model.to_string(),
            setting,
            lots: Vec::with_capacity(samples.len()),
            predictions: Vec::with_capacity(samples.len()),
            actuals: Vec::with_capacity(samples.len()),
        };
        for s in samples {
            let p = f(s)?;
            if p.len() != s.target.len() {
                return Err(Error::State(format!(
                    "{model} produced {} steps for a {}-step target",
                    p.len(),
                    s.target.len()
                )));
            }
            out.lots.push(s.target_lot.clone());
            out.predictions.push(p);
            out.actuals.push(s.target.clone());
        }
        Ok(out)
    }

    pub fn horizon(&self) -> usize {
        self.actuals.first().map_or(0, Vec::len)
    }

    /// Metrics over all steps of all windows.
    pub fn report(&self, eps: f64) -> Result<MetricsReport> {
        let mut acc = MetricsAccumulator::new(eps);
        for ((lot, p), y) in self.lots.iter().zip(&self.predictions).zip(&self.actuals) {
            acc.add(lot, p, y)?;
        }
        acc.finish()
    }

    /// Metrics of the `h`-th step ahead (1-based) only.
    pub fn horizon_report(&self, h: usize, eps: f64) -> Result<MetricsReport> {
        if h == 0 || h > self.horizon() {
            return Err(Error::Parameter(format!(
                "horizon {h} outside 1..={} of {}",
                self.horizon(),
                self.model
            )));
        }
        let mut acc = MetricsAccumulator::new(eps);
        for ((lot, p), y) in self.lots.iter().zip(&self.predictions).zip(&self.actuals) {
            acc.add(lot, &p[h - 1..h], &y[h - 1..h])?;
        }
        acc.finish()
    }
}

pub fn forecast_transformer(model: &TrainedModel, samples: &[WindowSample]) -> Result<Forecasts> {
    let setting = samples.first().map(|s| s.setting);
    Forecasts::collect("Transformer", setting, samples, |s| model.forward(s))
}

pub fn forecast_nlinear(
    train_samples: &[WindowSample],
    test_samples: &[WindowSample],
    cfg: &NLinearConfig,
) -> Result<Forecasts> {
    let model = nlinear_fit(train_samples, cfg)?;
    let setting = test_samples.first().map(|s| s.setting);
    Forecasts::collect("NLinear", setting, test_samples, |s| nlinear_predict(&model, &s.target_history()))
}

fn frame_of<'a>(frames: &'a [FeatureFrame], s: &WindowSample) -> Result<(&'a FeatureFrame, &'a [f64])> {
    let frame = frames
        .iter()
        .find(|f| f.zone_id == s.zone_id)
        .ok_or_else(|| Error::Data(format!("no frame for zone {}", s.zone_id)))?;
    let series = frame
        .lot_series(&s.target_lot)
        .ok_or_else(|| Error::Data(format!("lot {} missing from zone {}", s.target_lot, s.zone_id)))?;
    Ok((frame, series))
}

/// Historical average fitted on each lot's full history before the forecast origin.
pub fn forecast_ha(frames: &[FeatureFrame], samples: &[WindowSample]) -> Result<Forecasts> {
    Forecasts::collect("HA", None, samples, |s| {
        let (frame, series) = frame_of(frames, s)?;
        ha_forecast_at(series, &frame.grid, s.offset + s.window, s.horizon())
    })
}

/// AR with differencing fitted on each lot's full history before the forecast origin.
pub fn forecast_ar(frames: &[FeatureFrame], samples: &[WindowSample], p: usize, d: usize) -> Result<Forecasts> {
    Forecasts::collect("AR", None, samples, |s| {
        let (_, series) = frame_of(frames, s)?;
        ar_forecast_at(series, s.offset + s.window, s.horizon(), p, d)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub model: String,
    pub setting: u8,
    pub mse: f64,
    pub mae: f64,
    pub mape: Option<f64>,
    pub n_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub cells: Vec<AblationCell>,
}

impl AblationTable {
    pub fn get(&self, model: &str, setting: u8) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.model == model && c.setting == setting)
    }

    /// Plain-text grid: one row per model, MSE / MAE per setting.
    pub fn to_text(&self) -> String {
        let mut models: Vec<&str> = Vec::new();
        let mut settings: BTreeSet<u8> = BTreeSet::new();
        for c in &self.cells {
            if !models.contains(&c.model.as_str()) {
                models.push(&c.model);
            }
            settings.insert(c.setting);
        }
        let mut s = format!("{:<12}", "model");
        for k in &settings {
            let _ = write!(s, " | {:^21}", format!("setting {k}"));
        }
        s.push('\n');
        let mut sub = format!("{:<12}", "");
        for _ in &settings {
            let _ = write!(sub, " | {:>10} {:>10}", "MSE", "MAE");
        }
        s.push_str(&sub);
        s.push('\n');
        for m in models {
            let _ = write!(s, "{m:<12}");
            for k in &settings {
                match self.get(m, *k) {
                    Some(c) => {
                        let _ = write!(s, " | {:>10.6} {:>10.6}", c.mse, c.mae);
                    }
                    None => {
                        let _ = write!(s, " | {:>10} {:>10}", "-", "-");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Ablation results plus the underlying forecasts, so sweeps and baseline
/// comparisons can reuse them without retraining.
#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub table: AblationTable,
    pub forecasts: Vec<Forecasts>,
    pub models: BTreeMap<u8, TrainedModel>,
}

impl AblationOutcome {
    pub fn forecasts_for(&self, model: &str, setting: FeatureSetting) -> Option<&Forecasts> {
        self.forecasts.iter().find(|f| f.model == model && f.setting == Some(setting))
    }
}

/// Train and score NLinear and the Transformer under every configured
/// feature setting. The zone split is fixed by the caller and shared by all
/// cells; every cell uses the same seeds.
pub fn run_ablation(
    frames: &[FeatureFrame],
    train_zones: &BTreeSet<String>,
    test_zones: &BTreeSet<String>,
    cfg: &HarnessConfig,
) -> Result<AblationOutcome> {
    if cfg.settings.is_empty() {
        return Err(Error::Config("no feature settings selected".into()));
    }
    let max_lots = max_zone_lots(frames);
    let mut cells = Vec::new();
    let mut forecasts = Vec::new();
    let mut models = BTreeMap::new();
    for &setting in &cfg.settings {
        let train_set = zone_windows(frames, train_zones, setting, cfg.window, cfg.horizon, cfg.train_stride, max_lots)?;
        let test_set = zone_windows(frames, test_zones, setting, cfg.window, cfg.horizon, cfg.test_stride, max_lots)?;
        if train_set.is_empty() || test_set.is_empty() {
            return Err(Error::Data(format!(
                "setting {setting}: {} training and {} test windows; the frames are too short for window {} + horizon {}",
                train_set.len(),
                test_set.len(),
                cfg.window,
                cfg.horizon
            )));
        }
        log::info!(
            "setting {setting}: {} training windows, {} test windows, {} channels",
            train_set.len(),
            test_set.len(),
            train_set[0].channels
        );
        let nl = forecast_nlinear(&train_set, &test_set, &cfg.nlinear)?;
        let model = train(&train_set, cfg.model_for(setting, max_lots), &cfg.train)?;
        let tf = forecast_transformer(&model, &test_set)?;
        for f in [nl, tf] {
            let r = f.report(cfg.mape_eps)?;
            cells.push(AblationCell {
                model: f.model.clone(),
                setting: setting.number(),
                mse: r.mse,
                mae: r.mae,
                mape: r.mape,
                n_terms: r.n_terms,
            });
            forecasts.push(f);
        }
        models.insert(setting.number(), model);
    }
    Ok(AblationOutcome { table: AblationTable { cells }, forecasts, models })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub horizon: usize,
    pub model: String,
    pub mse: f64,
    pub mae: f64,
    pub mape: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurves {
    pub points: Vec<SweepPoint>,
}

impl SweepCurves {
    pub fn curve(&self, model: &str) -> Vec<&SweepPoint> {
        self.points.iter().filter(|p| p.model == model).collect()
    }

    pub fn mse_at(&self, model: &str, horizon: usize) -> Option<f64> {
        self.points.iter().find(|p| p.model == model && p.horizon == horizon).map(|p| p.mse)
    }

    /// `horizon,model,mse,mae,mape`; an undefined MAPE is left empty.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["horizon", "model", "mse", "mae", "mape"])?;
        for p in &self.points {
            w.write_record([
                p.horizon.to_string(),
                p.model.clone(),
                p.mse.to_string(),
                p.mae.to_string(),
                p.mape.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-horizon metrics for each model's multi-step forecasts.
pub fn horizon_sweep(forecasts: &[&Forecasts], horizons: &[usize], eps: f64) -> Result<SweepCurves> {
    let mut points = Vec::new();
    for f in forecasts {
        for &h in horizons {
            let r = f.horizon_report(h, eps)?;
            points.push(SweepPoint { horizon: h, model: f.model.clone(), mse: r.mse, mae: r.mae, mape: r.mape });
        }
    }
    Ok(SweepCurves { points })
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Parameter("labelings must be nonempty and of equal length".into()));
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let pairs = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
    let index: f64 = table.values().map(|&n| pairs(n)).sum();
    let sum_a: f64 = rows.values().map(|&n| pairs(n)).sum();
    let sum_b: f64 = cols.values().map(|&n| pairs(n)).sum();
    let total = pairs(a.len() as u64);
    let expected = sum_a * sum_b / total.max(1.0);
    let max = 0.5 * (sum_a + sum_b);
    if (max - expected).abs() < f64::EPSILON {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
