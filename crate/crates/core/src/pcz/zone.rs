use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_restarts, KMeansResult};
use crate::error::{Error, Result};
use crate::ingest::{ParkingRecord, Point};
use crate::time::Timestamp;

/// Per-lot clustering inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotFeature {
    pub lot_id: String,
    pub location: Point,
    /// Arrivals per day.
    pub mean_daily_inflow: f64,
    /// Departures per day.
    pub mean_daily_outflow: f64,
    pub capacity: f64,
}

/// Flow statistics for one lot over `[span_start, span_end)`.
pub fn lot_feature_vector(
    lot_records: &[ParkingRecord],
    location: Point,
    span_start: Timestamp,
    span_end: Timestamp,
) -> Result<LotFeature> {
    let first = lot_records
        .first()
        .ok_or_else(|| Error::Parameter("lot feature needs at least one record".into()))?;
    if span_end <= span_start {
        return Err(Error::Parameter("empty span".into()));
    }
    let days = (span_end.0 - span_start.0) as f64 / 86_400.0;
    let within = |t: Timestamp| span_start <= t && t < span_end;
    let arrivals = lot_records.iter().filter(|r| within(r.arrival)).count();
    let departures = lot_records.iter().filter(|r| within(r.departure)).count();
    let capacity = lot_records.iter().map(|r| r.capacity).max().unwrap_or(first.capacity);
    Ok(LotFeature {
        lot_id: first.lot_id.clone(),
        location,
        mean_daily_inflow: arrivals as f64 / days,
        mean_daily_outflow: departures as f64 / days,
        capacity: capacity as f64,
    })
}

/// `(sum |a_i - b_i|^p)^(1/p)`; `p = INFINITY` gives the maximum norm.
pub fn minkowski_distance(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Parameter(format!("Minkowski order must be >= 1, got {p}")));
    }
    if a.len() != b.len() {
        return Err(Error::Parameter("dimension mismatch".into()));
    }
    Ok(minkowski_unchecked(a, b, p))
}

fn minkowski_unchecked(a: &[f64], b: &[f64], p: f64) -> f64 {
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if p.is_infinite() {
        diffs.fold(0.0, f64::max)
    } else if p == 1.0 {
        diffs.sum()
    } else if p == 2.0 {
        diffs.map(|d| d * d).sum::<f64>().sqrt()
    } else {
        // scale by the largest difference so large p cannot overflow
        let m = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * diffs.map(|d| (d / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// A group of lots and the region where their trip demand is collected.
///
/// The region is the union of closed Minkowski balls of `radius` around
/// each member lot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkingClusterZone {
    pub zone_id: String,
    pub lot_ids: Vec<String>,
    pub centers: Vec<Point>,
    pub radius: f64,
    pub p: f64,
}

impl ParkingClusterZone {
    pub fn contains(&self, q: Point) -> bool {
        let q = q.as_array();
        self.centers
            .iter()
            .any(|c| minkowski_unchecked(&q, &c.as_array(), self.p) <= self.radius)
    }

    /// Axis-aligned box enclosing the region. Every Minkowski ball with
    /// `p >= 1` fits inside the max-norm ball of the same radius.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in &self.centers {
            lo.x = lo.x.min(c.x - self.radius);
            lo.y = lo.y.min(c.y - self.radius);
            hi.x = hi.x.max(c.x + self.radius);
            hi.y = hi.y.max(c.y + self.radius);
        }
        (lo, hi)
    }

    pub fn len(&self) -> usize {
        self.lot_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lot_ids.is_empty()
    }
}

/// Zone from a cluster of lots; members are stored sorted by lot id.
pub fn build_pcz(zone_id: &str, cluster: &[LotFeature], radius: f64, p: f64) -> Result<ParkingClusterZone> {
    if cluster.is_empty() {
        return Err(Error::Parameter(format!("zone {zone_id} has no lots")));
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::Parameter(format!("Minkowski order must be >= 1, got {p}")));
    }
    if !(radius >= 0.0) {
        return Err(Error::Parameter(format!("buffer radius must be >= 0, got {radius}")));
    }
    let mut members: Vec<&LotFeature> = cluster.iter().collect();
    members.sort_by(|a, b| a.lot_id.cmp(&b.lot_id));
    Ok(ParkingClusterZone {
        zone_id: zone_id.to_string(),
        lot_ids: members.iter().map(|l| l.lot_id.clone()).collect(),
        centers: members.iter().map(|l| l.location).collect(),
        radius,
        p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub k: usize,
    pub seed: u64,
    /// Independent k-means++ restarts; the lowest inertia wins.
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub radius: f64,
    pub p: f64,
    pub use_capacity: bool,
}

impl ClusterOptions {
    /// Defaults for `n_lots` lots: `k = ceil(n / 5)`, city-block buffers of 500 m.
    pub fn for_lots(n_lots: usize) -> Self {
        Self {
            k: n_lots.div_ceil(5).max(1),
            seed: 0,
            n_init: 10,
            max_iter: 300,
            tol: 1e-8,
            radius: 500.0,
            p: 1.0,
            use_capacity: true,
        }
    }
}

/// Z-scored clustering vectors: x, y, inflow, outflow and optionally capacity.
///
/// Constant dimensions map to 0.
pub fn clustering_matrix(lots: &[LotFeature], use_capacity: bool) -> Vec<Vec<f64>> {
    let raw: Vec<Vec<f64>> = lots
        .iter()
        .map(|l| {
            let mut v = vec![l.location.x, l.location.y, l.mean_daily_inflow, l.mean_daily_outflow];
            if use_capacity {
                v.push(l.capacity);
            }
            v
        })
        .collect();
    let n = raw.len() as f64;
    let dim = raw.first().map_or(0, Vec::len);
    let mut out = raw.clone();
    for d in 0..dim {
        let mean = raw.iter().map(|r| r[d]).sum::<f64>() / n;
        let var = raw.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for row in out.iter_mut() {
            row[d] = if sd > 0.0 { (row[d] - mean) / sd } else { 0.0 };
        }
    }
    out
}

/// Cluster lots and build one zone per cluster (`Z00`, `Z01`, ...).
pub fn cluster_lots(
    lots: &[LotFeature],
    opts: &ClusterOptions,
) -> Result<(Vec<ParkingClusterZone>, KMeansResult)> {
    let matrix = clustering_matrix(lots, opts.use_capacity);
    let result = kmeans_restarts(&matrix, opts.k, opts.seed, opts.n_init, opts.max_iter, opts.tol)?;
    let mut zones = Vec::new();
    for j in 0..opts.k {
        let members: Vec<LotFeature> = lots
            .iter()
            .zip(&result.assignments)
            .filter(|(_, &a)| a == j)
            .map(|(l, _)| l.clone())
            .collect();
        if members.is_empty() {
            continue;
        }
        zones.push(build_pcz(&format!("Z{:02}", zones.len()), &members, opts.radius, opts.p)?);
    }
    Ok((zones, result))
}
