use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::NLinearConfig;
use crate::error::{Error, Result};
use crate::eval::{HarnessConfig, DEFAULT_MAPE_EPS};
use crate::ingest::TravelMode;
use crate::model::{ModelConfig, TrainConfig};
use crate::pcz::ClusterOptions;
use crate::preprocess::{FeatureSetting, DEFAULT_HORIZON, DEFAULT_STEP_SECS, DEFAULT_WINDOW};
use crate::synth::{trip_file_name, SynthConfig, LOTS_FILE, PARKING_FILE};

/// One experiment: every knob of every stage, loaded from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed. Copied into the generator, clustering, split, model
    /// initialization and training shuffles.
    pub seed: u64,
    pub paths: PathsConfig,
    pub synth: SynthConfig,
    pub preprocess: PreprocessConfig,
    pub clustering: ClusteringConfig,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub evaluation: EvaluationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Directory holding (or receiving) the raw record files.
    pub data_dir: PathBuf,
    /// Overrides `data_dir/parking.csv`.
    pub parking: Option<PathBuf>,
    /// Overrides `data_dir/lots.csv`.
    pub lots: Option<PathBuf>,
    /// Per-mode overrides of `data_dir/trips_<mode>.csv`.
    pub metro: Option<PathBuf>,
    pub bus: Option<PathBuf>,
    pub ride_hailing: Option<PathBuf>,
    pub taxi: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            data_dir: "data".into(),
            parking: None,
            lots: None,
            metro: None,
            bus: None,
            ride_hailing: None,
            taxi: None,
            out_dir: "out".into(),
        }
    }
}

impl PathsConfig {
    pub fn parking_file(&self) -> PathBuf {
        self.parking.clone().unwrap_or_else(|| self.data_dir.join(PARKING_FILE))
    }

    pub fn lots_file(&self) -> PathBuf {
        self.lots.clone().unwrap_or_else(|| self.data_dir.join(LOTS_FILE))
    }

    pub fn trip_file(&self, mode: TravelMode) -> PathBuf {
        let over = match mode {
            TravelMode::Metro => &self.metro,
            TravelMode::Bus => &self.bus,
            TravelMode::RideHailing => &self.ride_hailing,
            TravelMode::Taxi => &self.taxi,
        };
        over.clone().unwrap_or_else(|| self.data_dir.join(trip_file_name(mode)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub step_secs: i64,
    /// Periods shorter than this are removed by the Fourier low-pass.
    pub cutoff_hours: f64,
    /// Low-pass the scaled demand channels as well, with this cutoff.
    /// Unset keeps the raw per-bin counts.
    pub demand_cutoff_hours: Option<f64>,
    /// Grid start; defaults to the generator's start.
    pub start: Option<String>,
    /// Grid length in days; defaults to the generator's length.
    pub days: Option<usize>,
    pub window: usize,
    pub horizon: usize,
    pub train_stride: usize,
    pub test_stride: usize,
    pub train_fraction: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            step_secs: DEFAULT_STEP_SECS,
            cutoff_hours: 1.0,
            demand_cutoff_hours: None,
            start: None,
            days: None,
            window: DEFAULT_WINDOW,
            horizon: DEFAULT_HORIZON,
            train_stride: 6,
            test_stride: 36,
            train_fraction: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    /// Number of zones; 0 means `ceil(lots / 5)`.
    pub k: usize,
    pub p: f64,
    pub radius: f64,
    pub use_capacity: bool,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        let d = ClusterOptions::for_lots(1);
        Self {
            k: 0,
            p: d.p,
            radius: d.radius,
            use_capacity: d.use_capacity,
            n_init: d.n_init,
            max_iter: d.max_iter,
            tol: d.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub horizons: Vec<usize>,
    /// Feature settings of the ablation grid.
    pub settings: Vec<FeatureSetting>,
    /// Feature setting used by `train`, `evaluate` and `sweep`.
    pub setting: FeatureSetting,
    pub mape_eps: f64,
    pub ar_p: usize,
    pub ar_d: usize,
    pub nlinear_ridge: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            horizons: vec![1, 6, 36, 72, 144],
            settings: FeatureSetting::ALL.to_vec(),
            setting: FeatureSetting::AllLotsWithDemand,
            mape_eps: DEFAULT_MAPE_EPS,
            ar_p: 6,
            ar_d: 1,
            nlinear_ridge: NLinearConfig::default().ridge,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            paths: PathsConfig::default(),
            synth: SynthConfig::default(),
            preprocess: PreprocessConfig::default(),
            clustering: ClusteringConfig::default(),
            model: ModelConfig::default(),
            training: TrainConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

/// Parse `value` as a TOML value, falling back to a bare string.
fn parse_override_value(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

/// Apply a `dotted.key=value` override to a TOML tree.
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key {key:?}")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key}: {part} is not a section")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_override_value(value.trim()));
    Ok(())
}

impl ExperimentConfig {
    /// Parse TOML text, apply overrides, and resolve derived fields.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("config: {e}")))?;
        cfg.resolved()
    }

    /// Load a config file; `None` starts from the defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    /// Propagate the master seed and check cross-field constraints.
    pub fn resolved(mut self) -> Result<Self> {
        self.synth.seed = self.seed;
        self.model.seed = self.seed;
        self.training.seed = self.seed;
        self.model.window = self.preprocess.window;
        self.model.horizon = self.preprocess.horizon;
        self.synth.step_secs = self.preprocess.step_secs;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.preprocess;
        if p.step_secs <= 0 || p.window == 0 || p.horizon == 0 || p.train_stride == 0 || p.test_stride == 0 {
            return Err(Error::Config("step, window, horizon and strides must be positive".into()));
        }
        if !(p.cutoff_hours >= 0.0) {
            return Err(Error::Config("cutoff_hours must be non-negative".into()));
        }
        if p.demand_cutoff_hours.is_some_and(|h| !(h >= 0.0 && h.is_finite())) {
            return Err(Error::Config("demand_cutoff_hours must be non-negative".into()));
        }
        if let Some(h) = self.evaluation.horizons.iter().find(|&&h| h == 0 || h > p.horizon) {
            return Err(Error::Config(format!("sweep horizon {h} outside 1..={}", p.horizon)));
        }
        if self.evaluation.settings.is_empty() {
            return Err(Error::Config("evaluation.settings is empty".into()));
        }
        self.synth.validate()?;
        self.model_template().validate()?;
        Ok(())
    }

    fn model_template(&self) -> ModelConfig {
        ModelConfig { input_channels: 1, ..self.model.clone() }
    }

    pub fn grid_start(&self) -> Result<crate::Timestamp> {
        match &self.preprocess.start {
            Some(s) => crate::Timestamp::parse(s).map_err(|e| Error::Config(format!("preprocess.start: {e}"))),
            None => self.synth.start_time(),
        }
    }

    pub fn grid_days(&self) -> usize {
        self.preprocess.days.unwrap_or(self.synth.n_days)
    }

    pub fn cluster_options(&self, n_lots: usize) -> ClusterOptions {
        let c = &self.clustering;
        let auto = ClusterOptions::for_lots(n_lots);
        ClusterOptions {
            k: if c.k == 0 { auto.k } else { c.k },
            seed: self.seed,
            n_init: c.n_init,
            max_iter: c.max_iter,
            tol: c.tol,
            radius: c.radius,
            p: c.p,
            use_capacity: c.use_capacity,
        }
    }

    pub fn harness(&self) -> HarnessConfig {
        HarnessConfig {
            window: self.preprocess.window,
            horizon: self.preprocess.horizon,
            train_stride: self.preprocess.train_stride,
            test_stride: self.preprocess.test_stride,
            model: self.model.clone(),
            train: self.training.clone(),
            nlinear: NLinearConfig { ridge: self.evaluation.nlinear_ridge },
            ar_p: self.evaluation.ar_p,
            ar_d: self.evaluation.ar_d,
            mape_eps: self.evaluation.mape_eps,
            settings: self.evaluation.settings.clone(),
        }
    }

    /// Hex SHA-256 of the resolved config's canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            config_hash: self.hash(),
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Attached to every emitted artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
}
