use serde::{Deserialize, Serialize};

use super::{DemandSeries, ParkingClusterZone};
use crate::error::{Error, Result};
use crate::ingest::TravelMode;
use crate::preprocess::{AvailabilitySeries, Grid};

/// Multichannel grid for one zone: member-lot availability plus the four
/// demand channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFrame {
    pub zone_id: String,
    pub grid: Grid,
    /// Lot channel order.
    pub lot_ids: Vec<String>,
    pub lot_channels: Vec<Vec<f64>>,
    /// Max-scaled counts in [`TravelMode::ALL`] order.
    pub demand_channels: Vec<Vec<f64>>,
    /// Divisors applied to the raw counts.
    pub demand_scale: [f64; 4],
}

impl FeatureFrame {
    pub fn channel_names(&self) -> Vec<String> {
        let mut names = self.lot_ids.clone();
        names.extend(TravelMode::ALL.iter().map(|m| format!("demand_{m}")));
        names
    }

    pub fn lot_series(&self, lot: &str) -> Option<&[f64]> {
        self.lot_ids
            .iter()
            .position(|l| l == lot)
            .map(|i| self.lot_channels[i].as_slice())
    }
}

/// Assemble a zone frame with `target_lot` first and the remaining lots by id.
///
/// Demand counts are divided by their per-channel maximum over the grid; an
/// all-zero channel keeps divisor 1.
pub fn assemble_frame(
    zone: &ParkingClusterZone,
    availability: &[AvailabilitySeries],
    demand: &DemandSeries,
    target_lot: &str,
) -> Result<FeatureFrame> {
    if !zone.lot_ids.iter().any(|l| l == target_lot) {
        return Err(Error::Parameter(format!(
            "target lot {target_lot} is not in zone {}",
            zone.zone_id
        )));
    }
    let grid = demand.grid;
    let mut others: Vec<&String> = zone.lot_ids.iter().filter(|l| *l != target_lot).collect();
    others.sort();
    let mut lot_ids = vec![target_lot.to_string()];
    lot_ids.extend(others.into_iter().cloned());

    let mut lot_channels = Vec::with_capacity(lot_ids.len());
    for id in &lot_ids {
        let s = availability
            .iter()
            .find(|s| &s.lot_id == id)
            .ok_or_else(|| Error::Data(format!("no availability series for lot {id}")))?;
        s.grid.check_aligned(&grid)?;
        lot_channels.push(s.values.clone());
    }

    let mut demand_scale = [1.0; 4];
    let mut demand_channels = Vec::with_capacity(4);
    for mode in TravelMode::ALL {
        let raw = demand.channel(mode);
        let max = raw.iter().copied().fold(0.0, f64::max);
        let scale = if max > 0.0 { max } else { 1.0 };
        demand_scale[mode.index()] = scale;
        demand_channels.push(raw.into_iter().map(|v| v / scale).collect());
    }
    Ok(FeatureFrame {
        zone_id: zone.zone_id.clone(),
        grid,
        lot_ids,
        lot_channels,
        demand_channels,
        demand_scale,
    })
}
