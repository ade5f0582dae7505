//! The `parkcast` subcommands. Each reads its upstream artifacts from the
//! output directory, writes its own, and returns the paths it wrote.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Provenance};
use super::pipeline::{cluster_stage, fuse_stage, load_inputs, ClusterStage};
use crate::error::{Error, Result};
use crate::eval::{
    cost_report, forecast_ar, forecast_ha, forecast_nlinear, forecast_transformer, horizon_sweep,
    max_zone_lots, run_ablation, zone_windows, AblationTable, CostReport, Forecasts, MetricsReport,
};
use crate::ingest::{DropReport, TravelMode};
use crate::model::{train, TrainedModel};
use crate::pcz::{FeatureFrame, FuseReport};
use crate::preprocess::{read_columnar, write_columnar, FeatureSetting, Grid};
use crate::synth::{generate, write_city, MANIFEST_FILE};

pub const ZONES_FILE: &str = "zones.json";
pub const CLUSTER_REPORT_FILE: &str = "cluster_report.txt";
pub const FRAMES_FILE: &str = "frames.json";
pub const FRAMES_DIR: &str = "frames";
pub const MODEL_FILE: &str = "model.json";
pub const LOSS_FILE: &str = "loss_curve.csv";
pub const EVALUATION_FILE: &str = "evaluation.json";
pub const EVALUATION_TABLE_FILE: &str = "evaluation.txt";
pub const ABLATION_FILE: &str = "ablation.json";
pub const ABLATION_TABLE_FILE: &str = "ablation.txt";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_JSON_FILE: &str = "sweep.json";
pub const PROVENANCE_FILE: &str = "provenance.json";

/// A JSON artifact: provenance plus a body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub provenance: Provenance,
    #[serde(flatten)]
    pub body: T,
}

fn write_json<T: Serialize>(path: &Path, cfg: &ExperimentConfig, body: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let artifact = Artifact { provenance: cfg.provenance(), body };
    fs::write(path, serde_json::to_string_pretty(&artifact)? + "\n")?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path, command: &'static str) -> Result<Artifact<T>> {
    if !path.exists() {
        return Err(Error::Prerequisite { path: path.to_path_buf(), command });
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Plain-text artifacts get a provenance header line.
fn write_text(path: &Path, cfg: &ExperimentConfig, body: &str) -> Result<()> {
    let p = cfg.provenance();
    let header = format!(
        "# config_hash={} seed={} tool_version={}\n",
        p.config_hash, p.seed, p.tool_version
    );
    fs::write(path, header + body)?;
    Ok(())
}

fn out(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.paths.out_dir.join(name)
}

/// Generate the synthetic city into `paths.data_dir`.
pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let city = generate(&cfg.synth)?;
    let dir = &cfg.paths.data_dir;
    write_city(&city, dir)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    write_json(&manifest_path, cfg, &city.manifest)?;
    let files: BTreeMap<String, String> = city
        .manifest
        .files
        .iter()
        .map(|f| Ok((f.clone(), sha256_file(&dir.join(f))?)))
        .collect::<Result<_>>()?;
    write_json(&dir.join(PROVENANCE_FILE), cfg, &serde_json::json!({ "sha256": files }))?;
    log::info!(
        "synthesized {} lots, {} stays, {} trips into {}",
        city.lots.len(),
        city.parking.len(),
        city.manifest.coupled_trips + city.manifest.background_trips,
        dir.display()
    );
    let mut written: Vec<PathBuf> = city.manifest.files.iter().map(|f| dir.join(f)).collect();
    written.push(manifest_path);
    written.push(dir.join(PROVENANCE_FILE));
    Ok(written)
}

fn sha256_file(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(fs::read(path)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterArtifact {
    pub parking_drops: DropReport,
    pub trip_drops: BTreeMap<String, DropReport>,
    pub stage: ClusterStage,
}

pub fn cluster_report_text(stage: &ClusterStage) -> String {
    let mut s = format!(
        "{} lots in {} zones; k-means inertia {:.6} after {} iterations\n",
        stage.lot_features.len(),
        stage.zones.len(),
        stage.inertia,
        stage.iterations
    );
    let _ = writeln!(s, "{:<6} {:>5} {:>6}  lots", "zone", "size", "split");
    for z in &stage.zones {
        let side = if stage.split.train_zones.contains(&z.zone_id) { "train" } else { "test" };
        let _ = writeln!(s, "{:<6} {:>5} {:>6}  {}", z.zone_id, z.len(), side, z.lot_ids.join(","));
    }
    s
}

pub fn cmd_cluster(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let inputs = load_inputs(cfg)?;
    let stage = cluster_stage(&inputs, cfg)?;
    let report = cluster_report_text(&stage);
    let artifact = ClusterArtifact {
        parking_drops: inputs.parking_report,
        trip_drops: inputs.trip_reports,
        stage,
    };
    let zones = out(cfg, ZONES_FILE);
    write_json(&zones, cfg, &artifact)?;
    let text = out(cfg, CLUSTER_REPORT_FILE);
    write_text(&text, cfg, &report)?;
    Ok(vec![zones, text])
}

pub fn load_cluster(cfg: &ExperimentConfig) -> Result<ClusterStage> {
    Ok(read_json::<ClusterArtifact>(&out(cfg, ZONES_FILE), "cluster")?.body.stage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub zone_id: String,
    pub file: String,
    pub lot_ids: Vec<String>,
    pub demand_scale: [f64; 4],
    pub fuse: FuseReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramesIndex {
    pub grid: Grid,
    pub frames: Vec<FrameEntry>,
}

pub fn cmd_fuse(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let stage = load_cluster(cfg)?;
    let inputs = load_inputs(cfg)?;
    let (frames, reports) = fuse_stage(&inputs, &stage, cfg)?;
    let dir = out(cfg, FRAMES_DIR);
    fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    let mut entries = Vec::new();
    for f in &frames {
        let file = format!("{FRAMES_DIR}/{}.csv", f.zone_id);
        let path = out(cfg, &file);
        let columns: Vec<&[f64]> =
            f.lot_channels.iter().chain(&f.demand_channels).map(Vec::as_slice).collect();
        write_columnar(BufWriter::new(File::create(&path)?), &f.grid, &f.channel_names(), &columns)?;
        written.push(path);
        entries.push(FrameEntry {
            zone_id: f.zone_id.clone(),
            file,
            lot_ids: f.lot_ids.clone(),
            demand_scale: f.demand_scale,
            fuse: reports[&f.zone_id],
        });
    }
    let index = out(cfg, FRAMES_FILE);
    write_json(&index, cfg, &FramesIndex { grid: stage.grid, frames: entries })?;
    written.push(index);
    Ok(written)
}

pub fn load_frames(cfg: &ExperimentConfig) -> Result<Vec<FeatureFrame>> {
    let index = read_json::<FramesIndex>(&out(cfg, FRAMES_FILE), "fuse")?.body;
    let mut frames = Vec::new();
    for e in index.frames {
        let path = out(cfg, &e.file);
        if !path.exists() {
            return Err(Error::Prerequisite { path, command: "fuse" });
        }
        let col = read_columnar(File::open(&path)?)?;
        col.grid.check_aligned(&index.grid)?;
        let m = e.lot_ids.len();
        if col.columns.len() != m + TravelMode::ALL.len() || col.names[..m] != e.lot_ids[..] {
            return Err(Error::Schema(format!("{} does not match {FRAMES_FILE}", path.display())));
        }
        let mut columns = col.columns;
        let demand_channels = columns.split_off(m);
        frames.push(FeatureFrame {
            zone_id: e.zone_id,
            grid: col.grid,
            lot_ids: e.lot_ids,
            lot_channels: columns,
            demand_channels,
            demand_scale: e.demand_scale,
        });
    }
    Ok(frames)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub setting: FeatureSetting,
    pub max_lots: usize,
    pub model: TrainedModel,
}

pub fn cmd_train(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let stage = load_cluster(cfg)?;
    let frames = load_frames(cfg)?;
    let h = cfg.harness();
    let setting = cfg.evaluation.setting;
    let max_lots = max_zone_lots(&frames);
    let train_set = zone_windows(&frames, &stage.split.train_zones, setting, h.window, h.horizon, h.train_stride, max_lots)?;
    if train_set.is_empty() {
        return Err(Error::Data(format!(
            "no training windows: frames of {} steps are shorter than window {} + horizon {}",
            stage.grid.len, h.window, h.horizon
        )));
    }
    log::info!("training on {} windows (setting {setting})", train_set.len());
    let model = train(&train_set, h.model_for(setting, max_lots), &h.train)?;
    let mut curve = String::from("epoch,train_mse\n");
    for (i, v) in model.train_loss_curve.iter().enumerate() {
        let _ = writeln!(curve, "{},{v}", i + 1);
    }
    let path = out(cfg, MODEL_FILE);
    write_json(&path, cfg, &ModelArtifact { setting, max_lots, model })?;
    let loss = out(cfg, LOSS_FILE);
    write_text(&loss, cfg, &curve)?;
    Ok(vec![path, loss])
}

pub fn load_model(cfg: &ExperimentConfig) -> Result<ModelArtifact> {
    let art = read_json::<ModelArtifact>(&out(cfg, MODEL_FILE), "train")?.body;
    art.model.validate()?;
    Ok(art)
}

/// Forecasts of the trained Transformer and the three baselines on the test zones.
pub fn score_models(cfg: &ExperimentConfig, frames: &[FeatureFrame], stage: &ClusterStage, art: &ModelArtifact) -> Result<Vec<Forecasts>> {
    let h = cfg.harness();
    let test = zone_windows(frames, &stage.split.test_zones, art.setting, h.window, h.horizon, h.test_stride, art.max_lots)?;
    if test.is_empty() {
        return Err(Error::Data("no test windows".into()));
    }
    let train_set = zone_windows(frames, &stage.split.train_zones, art.setting, h.window, h.horizon, h.train_stride, art.max_lots)?;
    Ok(vec![
        forecast_transformer(&art.model, &test)?,
        forecast_nlinear(&train_set, &test, &h.nlinear)?,
        forecast_ha(frames, &test)?,
        forecast_ar(frames, &test, h.ar_p, h.ar_d)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationBody {
    pub setting: FeatureSetting,
    pub reports: BTreeMap<String, MetricsReport>,
    pub cost: CostReport,
}

pub fn evaluation_text(body: &EvaluationBody) -> String {
    let mut s = format!("feature setting {}\n", body.setting);
    let _ = writeln!(s, "{:<12} {:>10} {:>10} {:>10}", "model", "MSE", "MAE", "MAPE(%)");
    for (m, r) in &body.reports {
        let mape = r.mape.map_or("undefined".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(s, "{m:<12} {:>10.6} {:>10.6} {mape:>10}", r.mse, r.mae);
    }
    let _ = writeln!(
        s,
        "Transformer cost: {:.4} M params, {:.4} G MACs per window",
        body.cost.params_millions, body.cost.macs_billions
    );
    s
}

pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let art = load_model(cfg)?;
    let stage = load_cluster(cfg)?;
    let frames = load_frames(cfg)?;
    let forecasts = score_models(cfg, &frames, &stage, &art)?;
    let reports = forecasts
        .iter()
        .map(|f| Ok((f.model.clone(), f.report(cfg.evaluation.mape_eps)?)))
        .collect::<Result<_>>()?;
    let body = EvaluationBody { setting: art.setting, reports, cost: cost_report(&art.model.config) };
    let json = out(cfg, EVALUATION_FILE);
    write_json(&json, cfg, &body)?;
    let text = out(cfg, EVALUATION_TABLE_FILE);
    write_text(&text, cfg, &evaluation_text(&body))?;
    Ok(vec![json, text])
}

pub fn cmd_ablate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let stage = load_cluster(cfg)?;
    let frames = load_frames(cfg)?;
    let outcome = run_ablation(&frames, &stage.split.train_zones, &stage.split.test_zones, &cfg.harness())?;
    let json = out(cfg, ABLATION_FILE);
    write_json(&json, cfg, &outcome.table)?;
    let text = out(cfg, ABLATION_TABLE_FILE);
    write_text(&text, cfg, &outcome.table.to_text())?;
    Ok(vec![json, text])
}

pub fn load_ablation(cfg: &ExperimentConfig) -> Result<AblationTable> {
    Ok(read_json::<AblationTable>(&out(cfg, ABLATION_FILE), "ablate")?.body)
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let art = load_model(cfg)?;
    let stage = load_cluster(cfg)?;
    let frames = load_frames(cfg)?;
    let forecasts = score_models(cfg, &frames, &stage, &art)?;
    let refs: Vec<&Forecasts> = forecasts.iter().collect();
    let curves = horizon_sweep(&refs, &cfg.evaluation.horizons, cfg.evaluation.mape_eps)?;
    let csv_path = out(cfg, SWEEP_FILE);
    curves.write_csv(BufWriter::new(File::create(&csv_path)?))?;
    let json = out(cfg, SWEEP_JSON_FILE);
    write_json(&json, cfg, &curves)?;
    Ok(vec![csv_path, json])
}
