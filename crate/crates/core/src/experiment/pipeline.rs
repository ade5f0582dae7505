//! Stage functions shared by the commands, the examples and the tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::ingest::{
    read_lot_locations, read_parking_file, read_trip_file, DropReport, LotLocation, ParkingRecord,
    ParkingSchema, Point, TravelMode, TripRecord, TripSchema,
};
use crate::pcz::{
    assemble_frame, cluster_lots, fuse_demand, lot_feature_vector, FeatureFrame, FuseReport,
    KMeansResult, LotFeature, ParkingClusterZone,
};
use crate::preprocess::{
    build_occupancy_series, fourier_denoise, fourier_lowpass, split_by_zone, AvailabilitySeries, Grid, SplitPlan,
};
use crate::synth::SynthCity;

/// Cleaned raw inputs.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub parking: Vec<ParkingRecord>,
    pub trips: Vec<TripRecord>,
    pub lots: Vec<LotLocation>,
    pub parking_report: DropReport,
    pub trip_reports: BTreeMap<String, DropReport>,
}

impl Inputs {
    pub fn from_city(city: &SynthCity) -> Self {
        let total = city.parking.len();
        Self {
            parking: city.parking.clone(),
            trips: city.all_trips(),
            lots: city.lots.clone(),
            parking_report: DropReport { total_rows: total, retained: total, ..DropReport::default() },
            trip_reports: TravelMode::ALL
                .iter()
                .map(|m| {
                    let n = city.trips[m.index()].len();
                    (m.as_str().to_string(), DropReport { total_rows: n, retained: n, ..DropReport::default() })
                })
                .collect(),
        }
    }
}

fn require(path: &std::path::Path, command: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Prerequisite { path: path.to_path_buf(), command })
    }
}

/// Read and clean the parking, lot and trip files named by the config.
pub fn load_inputs(cfg: &ExperimentConfig) -> Result<Inputs> {
    let paths = &cfg.paths;
    let parking_path = paths.parking_file();
    let lots_path = paths.lots_file();
    require(&parking_path, "synth")?;
    require(&lots_path, "synth")?;
    let (parking, parking_report) = read_parking_file(&parking_path, &ParkingSchema::default())?;
    let lots = read_lot_locations(std::fs::File::open(&lots_path)?)?;
    let mut trips = Vec::new();
    let mut trip_reports = BTreeMap::new();
    for mode in TravelMode::ALL {
        let path = paths.trip_file(mode);
        if !path.exists() {
            log::warn!("no {mode} trip file at {}; that demand channel stays zero", path.display());
            continue;
        }
        let (records, report) = read_trip_file(&path, mode, &TripSchema::default())?;
        trips.extend(records);
        trip_reports.insert(mode.as_str().to_string(), report);
    }
    log::info!(
        "loaded {} parking records ({} dropped), {} trips, {} lots",
        parking.len(),
        parking_report.total_rows - parking_report.retained,
        trips.len(),
        lots.len()
    );
    Ok(Inputs { parking, trips, lots, parking_report, trip_reports })
}

pub fn grid_for(cfg: &ExperimentConfig) -> Result<Grid> {
    let start = cfg.grid_start()?;
    let days = cfg.grid_days();
    if days == 0 {
        return Err(Error::Config("grid needs at least one day".into()));
    }
    Grid::spanning(start, start.plus(days as i64 * 86_400), cfg.preprocess.step_secs)
}

fn records_by_lot(parking: &[ParkingRecord]) -> BTreeMap<&str, Vec<ParkingRecord>> {
    let mut by_lot: BTreeMap<&str, Vec<ParkingRecord>> = BTreeMap::new();
    for r in parking {
        by_lot.entry(r.lot_id.as_str()).or_default().push(r.clone());
    }
    by_lot
}

/// Located lots that have parking records, in id order.
fn usable_lots<'a>(
    inputs: &'a Inputs,
    by_lot: &BTreeMap<&str, Vec<ParkingRecord>>,
) -> Vec<&'a LotLocation> {
    let mut lots: Vec<&LotLocation> = inputs.lots.iter().collect();
    lots.sort_by(|a, b| a.lot_id.cmp(&b.lot_id));
    lots.dedup_by(|a, b| a.lot_id == b.lot_id);
    for id in by_lot.keys() {
        if !lots.iter().any(|l| l.lot_id == *id) {
            log::warn!("lot {id} has records but no location; it is skipped");
        }
    }
    lots.retain(|l| {
        let keep = by_lot.contains_key(l.lot_id.as_str());
        if !keep {
            log::warn!("lot {} has a location but no records; it is skipped", l.lot_id);
        }
        keep
    });
    lots
}

/// Clustering outcome, as written by the `cluster` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStage {
    pub grid: Grid,
    pub lot_features: Vec<LotFeature>,
    pub zones: Vec<ParkingClusterZone>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub split: SplitPlan,
}

pub fn cluster_stage(inputs: &Inputs, cfg: &ExperimentConfig) -> Result<ClusterStage> {
    let grid = grid_for(cfg)?;
    let by_lot = records_by_lot(&inputs.parking);
    let lots = usable_lots(inputs, &by_lot);
    if lots.len() < 2 {
        return Err(Error::Data(format!("need at least 2 lots with records, found {}", lots.len())));
    }
    let features = lots
        .iter()
        .map(|l| lot_feature_vector(&by_lot[l.lot_id.as_str()], Point::new(l.x, l.y), grid.start, grid.end()))
        .collect::<Result<Vec<_>>>()?;
    let opts = cfg.cluster_options(features.len());
    let (zones, km): (Vec<ParkingClusterZone>, KMeansResult) = cluster_lots(&features, &opts)?;
    let split = split_by_zone(&zones, cfg.preprocess.train_fraction, cfg.seed)?;
    Ok(ClusterStage {
        grid,
        lot_features: features,
        zones,
        assignments: km.assignments,
        inertia: km.inertia,
        inertia_history: km.inertia_history,
        iterations: km.iterations,
        split,
    })
}

/// Denoised availability of every clustered lot.
pub fn availability_stage(inputs: &Inputs, stage: &ClusterStage, cfg: &ExperimentConfig) -> Vec<AvailabilitySeries> {
    let by_lot = records_by_lot(&inputs.parking);
    let cutoff = cfg.preprocess.cutoff_hours * 3600.0;
    stage
        .lot_features
        .iter()
        .map(|l| {
            let recs = by_lot.get(l.lot_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let raw = build_occupancy_series(recs, &l.lot_id, stage.grid);
            fourier_denoise(&raw, cutoff)
        })
        .collect()
}

/// Per-zone feature frames, zones in id order, each with its lowest lot id first.
pub fn fuse_stage(
    inputs: &Inputs,
    stage: &ClusterStage,
    cfg: &ExperimentConfig,
) -> Result<(Vec<FeatureFrame>, BTreeMap<String, FuseReport>)> {
    let availability = availability_stage(inputs, stage, cfg);
    let mut frames = Vec::with_capacity(stage.zones.len());
    let mut reports = BTreeMap::new();
    for zone in &stage.zones {
        let (demand, report) = fuse_demand(&inputs.trips, zone, stage.grid);
        if report.outside_grid > 0 {
            log::debug!("zone {}: {} endpoints fall outside the grid", zone.zone_id, report.outside_grid);
        }
        let mut frame = assemble_frame(zone, &availability, &demand, &zone.lot_ids[0])?;
        if let Some(hours) = cfg.preprocess.demand_cutoff_hours {
            for ch in &mut frame.demand_channels {
                *ch = fourier_lowpass(ch, stage.grid.step, hours * 3600.0)
                    .into_iter()
                    .map(|v| v.clamp(0.0, 1.0))
                    .collect();
            }
        }
        frames.push(frame);
        reports.insert(zone.zone_id.clone(), report);
    }
    frames.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
    Ok((frames, reports))
}

/// All preprocessing in memory: clustering, zones, split and frames.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub stage: ClusterStage,
    pub frames: Vec<FeatureFrame>,
    pub fuse_reports: BTreeMap<String, FuseReport>,
}

pub fn prepare(inputs: &Inputs, cfg: &ExperimentConfig) -> Result<Prepared> {
    let stage = cluster_stage(inputs, cfg)?;
    let (frames, fuse_reports) = fuse_stage(inputs, &stage, cfg)?;
    Ok(Prepared { stage, frames, fuse_reports })
}
