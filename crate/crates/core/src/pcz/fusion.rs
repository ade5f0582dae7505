use serde::{Deserialize, Serialize};

use super::ParkingClusterZone;
use crate::ingest::{Point, TravelMode, TripRecord};
use crate::preprocess::Grid;

/// Trip endpoint counts per grid bin for one zone, in [`TravelMode::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSeries {
    pub zone_id: String,
    pub grid: Grid,
    pub counts: Vec<[u32; 4]>,
}

impl DemandSeries {
    pub fn channel(&self, mode: TravelMode) -> Vec<f64> {
        self.counts.iter().map(|c| c[mode.index()] as f64).collect()
    }

    pub fn totals(&self) -> [u64; 4] {
        let mut t = [0u64; 4];
        for c in &self.counts {
            for (a, b) in t.iter_mut().zip(c) {
                *a += *b as u64;
            }
        }
        t
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuseReport {
    pub increments: usize,
    /// Endpoints inside the zone whose event time falls outside the grid.
    pub outside_grid: usize,
}

/// Count trip endpoints falling inside `zone`.
///
/// The origin is binned at `depart_time`, the destination (when present)
/// at `arrive_time`. A trip with both endpoints inside counts twice.
pub fn fuse_demand(trips: &[TripRecord], zone: &ParkingClusterZone, grid: Grid) -> (DemandSeries, FuseReport) {
    let mut counts = vec![[0u32; 4]; grid.len];
    let mut report = FuseReport::default();
    let (lo, hi) = zone.bounding_box();
    let inside = |p: Point| p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && zone.contains(p);
    for trip in trips {
        let m = trip.mode.index();
        let mut endpoint = |p: Point, t| {
            if !inside(p) {
                return;
            }
            match grid.bin_of(t) {
                Some(i) => {
                    counts[i][m] += 1;
                    report.increments += 1;
                }
                None => report.outside_grid += 1,
            }
        };
        endpoint(trip.origin, trip.depart_time);
        if let (Some(d), Some(t)) = (trip.destination, trip.arrive_time) {
            endpoint(d, t);
        }
    }
    (
        DemandSeries {
            zone_id: zone.zone_id.clone(),
            grid,
            counts,
        },
        report,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcz::{build_pcz, LotFeature};
    use crate::time::Timestamp;

    fn zone() -> ParkingClusterZone {
        let lot = LotFeature {
            lot_id: "A".into(),
            location: Point::new(0.0, 0.0),
            mean_daily_inflow: 0.0,
            mean_daily_outflow: 0.0,
            capacity: 1.0,
        };
        build_pcz("Z", &[lot], 500.0, 1.0).unwrap()
    }

    fn t(h: u32, m: u32) -> Timestamp {
        Timestamp::from_ymd_hms(2021, 9, 1, h, m, 0)
    }

    #[test]
    fn origin_inside_increments_departure_bin() {
        let grid = Grid::new(t(0, 0), 600, 144).unwrap();
        let trip = TripRecord {
            mode: TravelMode::Taxi,
            origin: Point::new(10.0, 10.0),
            destination: Some(Point::new(5000.0, 0.0)),
            depart_time: t(8, 3),
            arrive_time: Some(t(8, 25)),
        };
        let (d, r) = fuse_demand(&[trip], &zone(), grid);
        assert_eq!(d.counts[48], [0, 0, 0, 1]);
        assert_eq!(r.increments, 1);
    }

    #[test]
    fn both_endpoints_inside_count_twice() {
        let grid = Grid::new(t(0, 0), 600, 144).unwrap();
        let trip = TripRecord {
            mode: TravelMode::Metro,
            origin: Point::new(10.0, 10.0),
            destination: Some(Point::new(-100.0, 0.0)),
            depart_time: t(8, 3),
            arrive_time: Some(t(8, 25)),
        };
        let (d, _) = fuse_demand(&[trip], &zone(), grid);
        assert_eq!(d.counts[48][0], 1);
        assert_eq!(d.counts[50][0], 1);
        assert_eq!(d.totals(), [2, 0, 0, 0]);
    }

    #[test]
    fn outside_grid_is_reported() {
        let grid = Grid::new(t(8, 0), 600, 6).unwrap();
        let trip = TripRecord {
            mode: TravelMode::Bus,
            origin: Point::new(0.0, 0.0),
            destination: None,
            depart_time: t(23, 0),
            arrive_time: None,
        };
        let (d, r) = fuse_demand(&[trip], &zone(), grid);
        assert_eq!(d.totals(), [0; 4]);
        assert_eq!(r.outside_grid, 1);
    }
}
