use serde::{Deserialize, Serialize};

use super::Grid;
use crate::ingest::ParkingRecord;

/// Free spots over capacity for one lot, sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilitySeries {
    pub lot_id: String,
    pub grid: Grid,
    pub values: Vec<f64>,
    pub capacity: u32,
    /// Set when no records were available and the lot is reported empty.
    pub no_records: bool,
}

/// Availability of `lot` at every grid instant.
///
/// A vehicle is present at `t` when `arrival <= t < departure`. Records of
/// other lots are ignored.
pub fn build_occupancy_series(records: &[ParkingRecord], lot: &str, grid: Grid) -> AvailabilitySeries {
    let mut arrivals = Vec::new();
    let mut departures = Vec::new();
    let mut capacity = 0u32;
    for r in records.iter().filter(|r| r.lot_id == lot) {
        arrivals.push(r.arrival.0);
        departures.push(r.departure.0);
        capacity = capacity.max(r.capacity);
    }
    if arrivals.is_empty() {
        log::warn!("lot {lot}: no parking records, reporting an empty lot");
        return AvailabilitySeries {
            lot_id: lot.to_string(),
            grid,
            values: vec![1.0; grid.len],
            capacity: 1,
            no_records: true,
        };
    }
    arrivals.sort_unstable();
    departures.sort_unstable();
    let cap = capacity as f64;
    let values = (0..grid.len)
        .map(|i| {
            let t = grid.instant(i).0;
            let arrived = arrivals.partition_point(|&a| a <= t);
            let left = departures.partition_point(|&d| d <= t);
            let present = (arrived - left) as f64;
            ((cap - present) / cap).clamp(0.0, 1.0)
        })
        .collect();
    AvailabilitySeries {
        lot_id: lot.to_string(),
        grid,
        values,
        capacity,
        no_records: false,
    }
}
