//! Fixtures and brute-force oracles shared by the integration tests and the
//! acceptance harness.
#![allow(dead_code)]

use parkcast::ingest::{ParkingRecord, TripRecord};
use parkcast::eval::mse;
use parkcast::model::{CalendarFeature, ModelConfig, TrainedModel};
use parkcast::pcz::{minkowski_distance, ParkingClusterZone};
use parkcast::preprocess::{FeatureSetting, Grid, WindowSample};
use parkcast::Timestamp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// L=8, C=2, d_model=8, 2 heads, 1 layer, d_ff=16, H=2, hour-of-day calendar.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        input_channels: 2,
        window: 8,
        horizon: 2,
        d_model: 8,
        n_heads: 2,
        n_layers: 1,
        d_ff: 16,
        calendar: vec![CalendarFeature::Hour],
        patch_len: 1,
        dropout: 0.0,
        layer_norm_eps: 1e-5,
        seed: 11,
    }
}

pub fn t0() -> Timestamp {
    Timestamp::from_ymd_hms(2021, 9, 6, 7, 0, 0)
}

pub fn random_sample(cfg: &ModelConfig, seed: u64) -> WindowSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = cfg.input_channels;
    WindowSample {
        input: (0..cfg.window * c).map(|_| rng.random_range(0.0..1.0)).collect(),
        window: cfg.window,
        channels: c,
        input_start: t0().plus(rng.random_range(0..144) * 600),
        step: 600,
        target: (0..cfg.horizon).map(|_| rng.random_range(0.0..1.0)).collect(),
        target_lot: "P000".into(),
        zone_id: "Z00".into(),
        setting: if c == 1 { FeatureSetting::TargetOnly } else { FeatureSetting::AllLots },
        offset: 0,
    }
}

/// Worst entry of a central-difference gradient check over every parameter.
pub struct GradCheck {
    pub worst_rel: f64,
    pub worst_param: String,
    pub entries: usize,
}

/// Relative error `|a - n| / max(|a|, |n|, floor)`; the floor keeps
/// vanishing gradients from turning rounding noise into large ratios.
pub fn rel_err(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

pub fn gradient_check(model: &TrainedModel, sample: &WindowSample, delta: f64) -> GradCheck {
    let (_, grads) = model.loss_and_grads(sample, None).unwrap();
    let loss_of = |m: &TrainedModel| mse(&m.forward(sample).unwrap(), &sample.target).unwrap();
    let mut probe = model.clone();
    let mut out = GradCheck { worst_rel: 0.0, worst_param: String::new(), entries: 0 };
    for (name, analytic) in &grads {
        for i in 0..analytic.len() {
            let orig = probe.parameters[name].data[i];
            probe.parameters.get_mut(name).unwrap().data[i] = orig + delta;
            let up = loss_of(&probe);
            probe.parameters.get_mut(name).unwrap().data[i] = orig - delta;
            let down = loss_of(&probe);
            probe.parameters.get_mut(name).unwrap().data[i] = orig;
            let numeric = (up - down) / (2.0 * delta);
            let e = rel_err(analytic[i], numeric, 1e-7);
            if e > out.worst_rel {
                out.worst_rel = e;
                out.worst_param = format!("{name}[{i}]");
            }
            out.entries += 1;
        }
    }
    out
}

/// Availability by counting, at each instant, the stays that cover it.
pub fn brute_force_availability(records: &[ParkingRecord], lot: &str, grid: Grid) -> Vec<f64> {
    let mine: Vec<&ParkingRecord> = records.iter().filter(|r| r.lot_id == lot).collect();
    let cap = mine.iter().map(|r| r.capacity).max().unwrap_or(0) as f64;
    (0..grid.len)
        .map(|i| {
            let t = grid.instant(i);
            let present = mine.iter().filter(|r| r.arrival <= t && t < r.departure).count() as f64;
            ((cap - present) / cap).clamp(0.0, 1.0)
        })
        .collect()
}

fn inside(zone: &ParkingClusterZone, p: parkcast::ingest::Point) -> bool {
    zone.centers
        .iter()
        .any(|c| minkowski_distance(&[p.x, p.y], &[c.x, c.y], zone.p).unwrap() <= zone.radius)
}

/// Per-bin, per-mode endpoint counts by a trips x bins double loop.
pub fn brute_force_demand(trips: &[TripRecord], zone: &ParkingClusterZone, grid: Grid) -> Vec<[u32; 4]> {
    let mut counts = vec![[0u32; 4]; grid.len];
    for trip in trips {
        let m = trip.mode.index();
        let mut endpoints = vec![(trip.origin, trip.depart_time)];
        if let (Some(d), Some(t)) = (trip.destination, trip.arrive_time) {
            endpoints.push((d, t));
        }
        for (p, t) in endpoints {
            if !inside(zone, p) {
                continue;
            }
            for (b, slot) in counts.iter_mut().enumerate() {
                let lo = grid.instant(b);
                let hi = grid.instant(b + 1);
                if lo <= t && t < hi {
                    slot[m] += 1;
                }
            }
        }
    }
    counts
}

/// Pearson correlation; zero when either side is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// `|corr(a[t], b[t + lag])|` for the given lag.
pub fn lagged_correlation(a: &[f64], b: &[f64], lag: usize) -> f64 {
    let n = a.len().min(b.len());
    correlation(&a[..n - lag], &b[lag..n]).abs()
}

/// A small city and model so the whole command chain runs in seconds.
pub const SMALL_PIPELINE: &[&str] = &[
    "synth.n_lots=12",
    "synth.n_clusters=3",
    "synth.n_days=7",
    "clustering.k=3",
    "preprocess.window=72",
    "preprocess.horizon=12",
    "preprocess.train_stride=24",
    "preprocess.test_stride=24",
    "model.d_model=8",
    "model.d_ff=16",
    "training.epochs=2",
    "evaluation.horizons=[1,6,12]",
];

pub const PIPELINE: &[&str] = &["synth", "cluster", "fuse", "train", "evaluate", "ablate", "sweep"];

/// Run one `parkcast` subcommand inside `dir` with the small-pipeline overrides.
pub fn run_cli(dir: &std::path::Path, command: &str) -> std::process::Output {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_parkcast"));
    cmd.current_dir(dir).env("RUST_LOG", "error");
    for s in SMALL_PIPELINE {
        cmd.arg("--set").arg(s);
    }
    cmd.arg(command).output().expect("spawn parkcast")
}

/// Every file under `root`, relative path to contents, in path order.
pub fn tree_bytes(root: &std::path::Path) -> std::collections::BTreeMap<std::path::PathBuf, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}
