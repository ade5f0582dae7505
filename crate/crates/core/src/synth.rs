//! Synthetic city: lots in spatial clusters, parking stays driven by a
//! periodic latent occupancy with zone-level noise, and multi-modal trips of
//! which a controllable fraction is coupled to parking arrivals.
//!
//! Each lot's arrival intensity is `f(t) * capacity / mean_stay`, where
//!
//! ```text
//! f(t) = base + A_d sin(2 pi (t - phase) / 24h) + A_w sin(2 pi t / 168h) + noise(t)
//! ```
//!
//! and `noise` is an Ornstein-Uhlenbeck process shared by a cluster. Stays
//! are log-normal and arrivals that find the lot full are turned away. With
//! probability `coupling`, an accepted arrival also emits a trip whose
//! endpoint lies near the lot and lands shortly before the arrival, so trip
//! counts lead occupancy. Background trips near each cluster arrive at a
//! constant rate and carry no occupancy signal.

use std::collections::{BTreeMap, BinaryHeap};
use std::cmp::Reverse;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    write_lot_locations, write_parking_records, write_trip_records, LotLocation, ParkingRecord,
    Point, TravelMode, TripRecord,
};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_lots: usize,
    pub n_clusters: usize,
    pub n_days: usize,
    /// First instant of the observed period, `YYYY-MM-DDTHH:MM:SS`.
    pub start: String,
    pub step_secs: i64,
    pub capacity_min: u32,
    pub capacity_max: u32,
    /// Side of the square city, meters.
    pub city_size: f64,
    /// Minimum distance between cluster centers, meters.
    pub min_center_gap: f64,
    /// Standard deviation of lot positions around their cluster center, meters.
    pub cluster_spread: f64,
    pub base_min: f64,
    pub base_max: f64,
    pub daily_amplitude: f64,
    pub weekly_amplitude: f64,
    /// Per-cluster shift of the daily wave, drawn from this range (hours).
    /// The default puts every peak at noon.
    pub phase_min_hours: f64,
    pub phase_max_hours: f64,
    /// Stationary standard deviation of the zone noise. Zero also makes every
    /// day replay the same arrival and stay draws.
    pub noise_sigma: f64,
    pub noise_tau_hours: f64,
    pub stay_median_hours: f64,
    pub stay_log_sigma: f64,
    /// Fraction of accepted arrivals that emit a trip.
    pub coupling: f64,
    pub lag_max_minutes: f64,
    /// Trip endpoints are placed within this city-block distance of their lot.
    pub radius: f64,
    /// Mode mix of coupled trips (metro, bus, ride-hailing, taxi).
    pub mode_weights: [f64; 4],
    /// Background trips per cluster per hour, by mode.
    pub background_rates: [f64; 4],
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_lots: 40,
            n_clusters: 8,
            n_days: 30,
            start: "2021-09-01T00:00:00".into(),
            step_secs: 600,
            capacity_min: 30,
            capacity_max: 120,
            city_size: 12_000.0,
            min_center_gap: 2_500.0,
            cluster_spread: 120.0,
            base_min: 0.3,
            base_max: 0.5,
            daily_amplitude: 0.25,
            weekly_amplitude: 0.08,
            phase_min_hours: 6.0,
            phase_max_hours: 6.0,
            noise_sigma: 0.12,
            noise_tau_hours: 4.0,
            stay_median_hours: 1.5,
            stay_log_sigma: 0.6,
            coupling: 0.6,
            lag_max_minutes: 20.0,
            radius: 500.0,
            mode_weights: [0.35, 0.25, 0.25, 0.15],
            background_rates: [6.0, 6.0, 4.0, 3.0],
        }
    }
}

impl SynthConfig {
    pub fn start_time(&self) -> Result<Timestamp> {
        Timestamp::parse(&self.start).map_err(|e| Error::Config(format!("synth start: {e}")))
    }

    pub fn end_time(&self) -> Result<Timestamp> {
        Ok(self.start_time()?.plus(self.n_days as i64 * 86_400))
    }

    /// Mean of the log-normal stay distribution, seconds.
    pub fn mean_stay_secs(&self) -> f64 {
        self.stay_median_hours * 3600.0 * (self.stay_log_sigma.powi(2) / 2.0).exp()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_lots == 0 || self.n_clusters == 0 || self.n_clusters > self.n_lots {
            return fail(format!(
                "need 1 <= n_clusters <= n_lots, got {} clusters for {} lots",
                self.n_clusters, self.n_lots
            ));
        }
        if self.n_days == 0 || self.step_secs <= 0 {
            return fail("n_days and step_secs must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.coupling) {
            return fail(format!("coupling {} outside [0, 1]", self.coupling));
        }
        if self.capacity_min == 0 || self.capacity_min > self.capacity_max {
            return fail("capacity range must satisfy 1 <= min <= max".into());
        }
        if !(self.phase_min_hours.is_finite() && self.phase_min_hours <= self.phase_max_hours && self.phase_max_hours.is_finite()) {
            return fail("phase range must satisfy min <= max".into());
        }
        if !(0.0 <= self.base_min && self.base_min <= self.base_max) {
            return fail("base occupancy range must satisfy 0 <= min <= max".into());
        }
        let peak = self.base_max + self.daily_amplitude.abs() + self.weekly_amplitude.abs();
        if peak > 0.95 {
            return fail(format!(
                "latent occupancy peaks at {peak:.3} of capacity before noise; keep it at or below 0.95"
            ));
        }
        let nonneg = [
            self.noise_sigma,
            self.lag_max_minutes,
            self.cluster_spread,
            self.stay_log_sigma,
        ];
        if nonneg.iter().any(|v| !(*v >= 0.0)) {
            return fail("noise, lag, spread and stay spread must be non-negative".into());
        }
        if !(self.noise_tau_hours > 0.0 && self.stay_median_hours > 0.0 && self.radius > 0.0) {
            return fail("noise time constant, stay median and radius must be positive".into());
        }
        if self.mode_weights.iter().chain(&self.background_rates).any(|r| !(*r >= 0.0)) {
            return fail("trip rates and mode weights must be non-negative".into());
        }
        if self.coupling > 0.0 && self.mode_weights.iter().sum::<f64>() <= 0.0 {
            return fail("coupled trips need a positive mode weight".into());
        }
        let needed = self.n_clusters as f64 * self.min_center_gap.powi(2);
        if needed > self.city_size.powi(2) * 0.5 {
            return fail("city too small to place the clusters at the requested gap".into());
        }
        self.start_time()?;
        Ok(())
    }
}

/// Per-cluster ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTruth {
    pub cluster: usize,
    pub center: Point,
    pub capacity: u32,
    pub base: f64,
    /// Hour of day at which the daily wave crosses upward.
    pub phase_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub clusters: Vec<ClusterTruth>,
    /// True cluster of every lot.
    pub labels: BTreeMap<String, usize>,
    pub mean_stay_hours: f64,
    pub lag_distribution: String,
    pub parking_records: usize,
    pub rejected_arrivals: usize,
    pub coupled_trips: usize,
    pub background_trips: usize,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SynthCity {
    pub lots: Vec<LotLocation>,
    pub parking: Vec<ParkingRecord>,
    /// Trips per mode, in `TravelMode::ALL` order.
    pub trips: [Vec<TripRecord>; 4],
    pub manifest: SynthManifest,
}

impl SynthCity {
    pub fn all_trips(&self) -> Vec<TripRecord> {
        self.trips.iter().flatten().cloned().collect()
    }
}

pub const PARKING_FILE: &str = "parking.csv";
pub const LOTS_FILE: &str = "lots.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn trip_file_name(mode: TravelMode) -> String {
    format!("trips_{}.csv", mode.as_str())
}

// Independent random streams per purpose.
const STREAM_LAYOUT: u64 = 1;
const STREAM_NOISE: u64 = 1 << 20;
const STREAM_LOT: u64 = 2 << 20;
const STREAM_BACKGROUND: u64 = 3 << 20;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn round_dm(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Uniform point in the city-block ball of radius `r` around `c`.
fn point_in_l1_ball(rng: &mut impl Rng, c: Point, r: f64) -> Point {
    loop {
        let dx = rng.random_range(-r..=r);
        let dy = rng.random_range(-r..=r);
        if dx.abs() + dy.abs() <= r {
            return Point::new(round_dm(c.x + dx), round_dm(c.y + dy));
        }
    }
}

fn pick_weighted(rng: &mut impl Rng, weights: &[f64; 4]) -> TravelMode {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return TravelMode::ALL[i];
        }
        u -= w;
    }
    TravelMode::ALL[3]
}

fn place_clusters(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Point>> {
    let margin = cfg.radius + 4.0 * cfg.cluster_spread;
    let mut centers: Vec<Point> = Vec::new();
    let mut attempts = 0;
    while centers.len() < cfg.n_clusters {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::Config("could not place clusters; enlarge city_size".into()));
        }
        let p = Point::new(
            rng.random_range(margin..cfg.city_size - margin),
            rng.random_range(margin..cfg.city_size - margin),
        );
        if centers.iter().all(|c| ((c.x - p.x).powi(2) + (c.y - p.y).powi(2)).sqrt() >= cfg.min_center_gap) {
            centers.push(Point::new(round_dm(p.x), round_dm(p.y)));
        }
    }
    Ok(centers)
}

/// Zone noise on a one-minute lattice starting a day before `start`.
fn ou_noise(cfg: &SynthConfig, cluster: usize, minutes: usize) -> Vec<f64> {
    if cfg.noise_sigma == 0.0 {
        return vec![0.0; minutes];
    }
    let mut rng = stream(cfg.seed, STREAM_NOISE + cluster as u64);
    let rho = (-60.0 / (cfg.noise_tau_hours * 3600.0)).exp();
    let innov = Normal::new(0.0, cfg.noise_sigma * (1.0 - rho * rho).sqrt()).expect("finite sigma");
    let mut x = Normal::new(0.0, cfg.noise_sigma).expect("finite sigma").sample(&mut rng);
    (0..minutes)
        .map(|_| {
            let v = x;
            x = rho * x + innov.sample(&mut rng);
            v
        })
        .collect()
}

struct LotSim<'a> {
    cfg: &'a SynthConfig,
    id: String,
    location: Point,
    capacity: u32,
    cluster: &'a ClusterTruth,
}

struct LotOutput {
    records: Vec<ParkingRecord>,
    rejected: usize,
    coupled: Vec<TripRecord>,
}

impl LotSim<'_> {
    fn latent(&self, t: Timestamp, noise: f64) -> f64 {
        use std::f64::consts::TAU;
        let hours = t.seconds_of_day() as f64 / 3600.0;
        let week_hours = (t.day_of_week()) * 24.0;
        let f = self.cluster.base
            + self.cfg.daily_amplitude * (TAU * (hours - self.cluster.phase_hours) / 24.0).sin()
            + self.cfg.weekly_amplitude * (TAU * week_hours / 168.0).sin()
            + noise;
        f.clamp(0.0, 1.0)
    }

    fn run(&self, lot_index: usize, sim_start: Timestamp, days: usize, noise: &[f64]) -> LotOutput {
        let cfg = self.cfg;
        let mean_stay = cfg.mean_stay_secs();
        let stay = LogNormal::new((cfg.stay_median_hours * 3600.0).ln(), cfg.stay_log_sigma)
            .expect("valid log-normal");
        let mut active: BinaryHeap<Reverse<i64>> = BinaryHeap::new();
        let mut out = LotOutput { records: Vec::new(), rejected: 0, coupled: Vec::new() };
        let replay = cfg.noise_sigma == 0.0;

        for day in 0..days {
            let key = if replay { 0 } else { day as u64 + 1 };
            let mut rng = stream(cfg.seed, STREAM_LOT + ((lot_index as u64) << 12) + key);
            let day_start = sim_start.plus(day as i64 * 86_400);
            for minute in 0..1440 {
                let t0 = day_start.plus(minute * 60);
                let nz = noise[day * 1440 + minute as usize];
                let rate = self.latent(t0, nz) * self.capacity as f64 / mean_stay * 60.0;
                let n = if rate > 0.0 {
                    Poisson::new(rate).expect("positive rate").sample(&mut rng) as usize
                } else {
                    0
                };
                let mut secs: Vec<i64> = (0..n).map(|_| rng.random_range(0..60)).collect();
                secs.sort_unstable();
                for s in secs {
                    let arrival = t0.plus(s);
                    while active.peek().is_some_and(|Reverse(d)| *d <= arrival.0) {
                        active.pop();
                    }
                    let duration = (stay.sample(&mut rng).round() as i64).max(60);
                    let couple = rng.random_bool(cfg.coupling);
                    let lag = rng.random_range(0.0..=cfg.lag_max_minutes * 60.0).round() as i64;
                    let mode = pick_weighted(&mut rng, &cfg.mode_weights);
                    let endpoint = point_in_l1_ball(&mut rng, self.location, 0.8 * cfg.radius);
                    let far = Point::new(
                        round_dm(rng.random_range(0.0..cfg.city_size)),
                        round_dm(rng.random_range(0.0..cfg.city_size)),
                    );
                    let ride = rng.random_range(600..=2400);
                    if active.len() >= self.capacity as usize {
                        out.rejected += 1;
                        continue;
                    }
                    let departure = arrival.plus(duration);
                    active.push(Reverse(departure.0));
                    out.records.push(ParkingRecord {
                        lot_id: self.id.clone(),
                        arrival,
                        departure,
                        date: arrival.date(),
                        capacity: self.capacity,
                    });
                    if couple {
                        let at = arrival.plus(-lag);
                        out.coupled.push(if mode.is_origin_only() {
                            TripRecord { mode, origin: endpoint, destination: None, depart_time: at, arrive_time: None }
                        } else {
                            TripRecord {
                                mode,
                                origin: far,
                                destination: Some(endpoint),
                                depart_time: at.plus(-ride),
                                arrive_time: Some(at),
                            }
                        });
                    }
                }
            }
        }
        out
    }
}

/// Generate the city in memory.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCity> {
    cfg.validate()?;
    let start = cfg.start_time()?;
    let sim_start = start.plus(-86_400);
    let sim_days = cfg.n_days + 1;
    let mut layout = stream(cfg.seed, STREAM_LAYOUT);

    let centers = place_clusters(cfg, &mut layout)?;
    let clusters: Vec<ClusterTruth> = centers
        .iter()
        .enumerate()
        .map(|(c, &center)| ClusterTruth {
            cluster: c,
            center,
            capacity: layout.random_range(cfg.capacity_min..=cfg.capacity_max),
            base: layout.random_range(cfg.base_min..=cfg.base_max),
            phase_hours: layout.random_range(cfg.phase_min_hours..=cfg.phase_max_hours),
        })
        .collect();

    let spread = Normal::new(0.0, cfg.cluster_spread.max(f64::MIN_POSITIVE)).expect("finite spread");
    let mut lots = Vec::with_capacity(cfg.n_lots);
    let mut labels = BTreeMap::new();
    let mut lot_meta = Vec::with_capacity(cfg.n_lots);
    for i in 0..cfg.n_lots {
        // round-robin keeps cluster sizes within one of each other
        let c = i % cfg.n_clusters;
        let id = format!("P{:03}", i);
        let loc = Point::new(
            round_dm(centers[c].x + spread.sample(&mut layout)),
            round_dm(centers[c].y + spread.sample(&mut layout)),
        );
        let jitter = layout.random_range(0.95..=1.05);
        let capacity = ((clusters[c].capacity as f64 * jitter).round() as u32).max(1);
        labels.insert(id.clone(), c);
        lots.push(LotLocation { lot_id: id.clone(), x: loc.x, y: loc.y });
        lot_meta.push((id, loc, capacity, c));
    }

    let minutes = sim_days * 1440;
    let noise: Vec<Vec<f64>> = (0..cfg.n_clusters).map(|c| ou_noise(cfg, c, minutes)).collect();

    let mut parking = Vec::new();
    let mut trips: [Vec<TripRecord>; 4] = Default::default();
    let mut rejected = 0;
    let mut coupled = 0;
    for (i, (id, loc, capacity, c)) in lot_meta.iter().enumerate() {
        let sim = LotSim { cfg, id: id.clone(), location: *loc, capacity: *capacity, cluster: &clusters[*c] };
        let out = sim.run(i, sim_start, sim_days, &noise[*c]);
        rejected += out.rejected;
        parking.extend(out.records);
        for t in out.coupled {
            if t.depart_time >= sim_start {
                coupled += 1;
                trips[t.mode.index()].push(t);
            }
        }
    }

    let mut background = 0;
    let span_secs = sim_days as i64 * 86_400;
    for (c, _) in clusters.iter().enumerate() {
        let members: Vec<Point> = lot_meta.iter().filter(|m| m.3 == c).map(|m| m.1).collect();
        for mode in TravelMode::ALL {
            let mut rng = stream(cfg.seed, STREAM_BACKGROUND + (c as u64) * 8 + mode.index() as u64);
            let expected = cfg.background_rates[mode.index()] * span_secs as f64 / 3600.0;
            if expected <= 0.0 {
                continue;
            }
            let n = Poisson::new(expected).expect("positive rate").sample(&mut rng) as usize;
            for _ in 0..n {
                let at = sim_start.plus(rng.random_range(0..span_secs));
                let lot = members[rng.random_range(0..members.len())];
                let endpoint = point_in_l1_ball(&mut rng, lot, 0.8 * cfg.radius);
                let trip = if mode.is_origin_only() {
                    TripRecord { mode, origin: endpoint, destination: None, depart_time: at, arrive_time: None }
                } else {
                    let far = Point::new(
                        round_dm(rng.random_range(0.0..cfg.city_size)),
                        round_dm(rng.random_range(0.0..cfg.city_size)),
                    );
                    let ride = rng.random_range(600..=2400);
                    TripRecord {
                        mode,
                        origin: far,
                        destination: Some(endpoint),
                        depart_time: at.plus(-ride),
                        arrive_time: Some(at),
                    }
                };
                trips[mode.index()].push(trip);
                background += 1;
            }
        }
    }

    parking.sort_by(|a, b| (&a.lot_id, a.arrival, a.departure).cmp(&(&b.lot_id, b.arrival, b.departure)));
    for list in trips.iter_mut() {
        list.sort_by(|a, b| {
            (a.depart_time, a.arrive_time)
                .cmp(&(b.depart_time, b.arrive_time))
                .then(a.origin.x.total_cmp(&b.origin.x))
                .then(a.origin.y.total_cmp(&b.origin.y))
        });
    }

    let mut files = vec![PARKING_FILE.to_string(), LOTS_FILE.to_string()];
    files.extend(TravelMode::ALL.iter().map(|m| trip_file_name(*m)));
    let manifest = SynthManifest {
        config: cfg.clone(),
        clusters,
        labels,
        mean_stay_hours: cfg.mean_stay_secs() / 3600.0,
        lag_distribution: format!("uniform(0, {} min) before the parking arrival", cfg.lag_max_minutes),
        parking_records: parking.len(),
        rejected_arrivals: rejected,
        coupled_trips: coupled,
        background_trips: background,
        files,
    };
    Ok(SynthCity { lots, parking, trips, manifest })
}

/// Write every file of `city` into `dir`.
pub fn write_city(city: &SynthCity, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_parking_records(BufWriter::new(File::create(dir.join(PARKING_FILE))?), &city.parking)?;
    write_lot_locations(BufWriter::new(File::create(dir.join(LOTS_FILE))?), &city.lots)?;
    for mode in TravelMode::ALL {
        let f = BufWriter::new(File::create(dir.join(trip_file_name(mode)))?);
        write_trip_records(f, &city.trips[mode.index()])?;
    }
    let text = serde_json::to_string_pretty(&city.manifest)?;
    fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(())
}
