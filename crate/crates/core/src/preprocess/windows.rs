use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcz::FeatureFrame;
use crate::time::Timestamp;

/// Ablation feature settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum FeatureSetting {
    /// Demand channels plus every lot in the zone.
    AllLotsWithDemand = 1,
    /// Demand channels plus the target lot.
    TargetWithDemand = 2,
    /// Every lot in the zone, no demand.
    AllLots = 3,
    /// Target lot only.
    TargetOnly = 4,
}

impl FeatureSetting {
    pub const ALL: [FeatureSetting; 4] = [
        FeatureSetting::AllLotsWithDemand,
        FeatureSetting::TargetWithDemand,
        FeatureSetting::AllLots,
        FeatureSetting::TargetOnly,
    ];

    pub fn uses_demand(self) -> bool {
        matches!(self, FeatureSetting::AllLotsWithDemand | FeatureSetting::TargetWithDemand)
    }

    pub fn uses_all_lots(self) -> bool {
        matches!(self, FeatureSetting::AllLotsWithDemand | FeatureSetting::AllLots)
    }

    /// Channel count for a zone of `zone_lots` lots.
    pub fn channels(self, zone_lots: usize) -> usize {
        let lots = if self.uses_all_lots() { zone_lots } else { 1 };
        lots + if self.uses_demand() { 4 } else { 0 }
    }

    pub fn number(self) -> u8 {
        self as u8
    }
}

impl From<FeatureSetting> for u8 {
    fn from(s: FeatureSetting) -> u8 {
        s as u8
    }
}

impl TryFrom<u8> for FeatureSetting {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(FeatureSetting::AllLotsWithDemand),
            2 => Ok(FeatureSetting::TargetWithDemand),
            3 => Ok(FeatureSetting::AllLots),
            4 => Ok(FeatureSetting::TargetOnly),
            _ => Err(Error::Parameter(format!("feature setting must be 1..=4, got {v}"))),
        }
    }
}

impl fmt::Display for FeatureSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// One supervised pair: `window` steps of input history, `horizon` steps of target.
///
/// Channel 0 of the input is always the target lot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    /// Row-major `[window x channels]`.
    pub input: Vec<f64>,
    pub window: usize,
    pub channels: usize,
    pub input_start: Timestamp,
    pub step: i64,
    pub target: Vec<f64>,
    pub target_lot: String,
    pub zone_id: String,
    pub setting: FeatureSetting,
    /// Grid index of the first input step.
    pub offset: usize,
}

impl WindowSample {
    pub fn horizon(&self) -> usize {
        self.target.len()
    }

    pub fn input_timestamps(&self) -> Vec<Timestamp> {
        (0..self.window)
            .map(|i| self.input_start.plus(i as i64 * self.step))
            .collect()
    }

    /// Timestamp of the `h`-th target step (0-based).
    pub fn target_timestamp(&self, h: usize) -> Timestamp {
        self.input_start.plus((self.window + h) as i64 * self.step)
    }

    pub fn channel(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.input.iter().skip(c).step_by(self.channels).copied()
    }

    /// The target lot's own input history.
    pub fn target_history(&self) -> Vec<f64> {
        self.channel(0).collect()
    }
}

/// Append zero lot channels so a sample cut from a zone with fewer lots
/// matches the channel count of a zone with `max_lots` lots. Demand channels
/// stay last. Settings without the other lots are returned unchanged.
pub fn pad_lot_channels(sample: &WindowSample, max_lots: usize) -> Result<WindowSample> {
    if !sample.setting.uses_all_lots() {
        return Ok(sample.clone());
    }
    let demand = if sample.setting.uses_demand() { 4 } else { 0 };
    let lots = sample.channels - demand;
    if lots > max_lots {
        return Err(Error::Parameter(format!(
            "sample has {lots} lot channels, more than the padding target {max_lots}"
        )));
    }
    let channels = max_lots + demand;
    let mut input = Vec::with_capacity(sample.window * channels);
    for row in sample.input.chunks(sample.channels) {
        input.extend_from_slice(&row[..lots]);
        input.extend(std::iter::repeat_n(0.0, max_lots - lots));
        input.extend_from_slice(&row[lots..]);
    }
    Ok(WindowSample { input, channels, ..sample.clone() })
}

/// Number of windows `make_windows` produces.
pub fn window_count(frame_len: usize, window: usize, horizon: usize, stride: usize) -> usize {
    if stride == 0 || frame_len < window + horizon {
        return 0;
    }
    (frame_len - window - horizon) / stride + 1
}

/// Cut `(input, target)` pairs at offsets `0, stride, 2*stride, ...`.
pub fn make_windows(
    frame: &FeatureFrame,
    target_lot: &str,
    window: usize,
    horizon: usize,
    stride: usize,
    setting: FeatureSetting,
) -> Result<Vec<WindowSample>> {
    if window == 0 || horizon == 0 || stride == 0 {
        return Err(Error::Parameter("window, horizon and stride must be positive".into()));
    }
    let target_idx = frame
        .lot_ids
        .iter()
        .position(|l| l == target_lot)
        .ok_or_else(|| {
            Error::Parameter(format!("lot {target_lot} is not in zone {}", frame.zone_id))
        })?;
    let len = frame.grid.len;
    let count = window_count(len, window, horizon, stride);
    if count == 0 {
        log::warn!(
            "zone {}: frame of {len} steps is shorter than window {window} + horizon {horizon}",
            frame.zone_id
        );
        return Ok(Vec::new());
    }

    let mut sources: Vec<&[f64]> = vec![&frame.lot_channels[target_idx]];
    if setting.uses_all_lots() {
        sources.extend(
            frame
                .lot_channels
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != target_idx)
                .map(|(_, c)| c.as_slice()),
        );
    }
    if setting.uses_demand() {
        sources.extend(frame.demand_channels.iter().map(Vec::as_slice));
    }
    let channels = sources.len();
    debug_assert_eq!(channels, setting.channels(frame.lot_ids.len()));

    let target_series = &frame.lot_channels[target_idx];
    let samples = (0..count)
        .map(|k| {
            let o = k * stride;
            let mut input = Vec::with_capacity(window * channels);
            for t in o..o + window {
                input.extend(sources.iter().map(|s| s[t]));
            }
            WindowSample {
                input,
                window,
                channels,
                input_start: frame.grid.instant(o),
                step: frame.grid.step,
                target: target_series[o + window..o + window + horizon].to_vec(),
                target_lot: target_lot.to_string(),
                zone_id: frame.zone_id.clone(),
                setting,
                offset: o,
            }
        })
        .collect();
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::preprocess::Grid;

    fn frame(len: usize, lots: usize) -> FeatureFrame {
        let grid = Grid::new(Timestamp(0), 600, len).unwrap();
        FeatureFrame {
            zone_id: "Z".into(),
            grid,
            lot_ids: (0..lots).map(|i| format!("L{i}")).collect(),
            lot_channels: (0..lots)
                .map(|l| (0..len).map(|t| (l * 10_000 + t) as f64).collect())
                .collect(),
            demand_channels: (0..4).map(|m| vec![-(m as f64) - 1.0; len]).collect(),
            demand_scale: [1.0; 4],
        }
    }

    #[test]
    fn paper_window_count() {
        let f = frame(4032, 1);
        let w = make_windows(&f, "L0", 432, 144, 1, FeatureSetting::TargetOnly).unwrap();
        assert_eq!(w.len(), 3457);
        assert_eq!(w[0].channels, 1);
    }

    #[test]
    fn stride_equal_to_length_gives_one_sample() {
        let f = frame(700, 2);
        let w = make_windows(&f, "L1", 432, 144, 700, FeatureSetting::AllLots).unwrap();
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn short_frame_is_empty() {
        let f = frame(100, 1);
        assert!(make_windows(&f, "L0", 96, 10, 1, FeatureSetting::TargetOnly)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn channel_layout_per_setting() {
        let f = frame(50, 3);
        for (setting, c) in [
            (FeatureSetting::AllLotsWithDemand, 7),
            (FeatureSetting::TargetWithDemand, 5),
            (FeatureSetting::AllLots, 3),
            (FeatureSetting::TargetOnly, 1),
        ] {
            let w = make_windows(&f, "L1", 10, 5, 7, setting).unwrap();
            assert_eq!(w[0].channels, c);
            // target lot first, then remaining lots in frame order, then demand
            let row: Vec<f64> = w[1].input[..c].to_vec();
            assert_eq!(row[0], 10_007.0);
            if setting.uses_all_lots() {
                assert_eq!(&row[1..3], &[7.0, 20_007.0]);
            }
            if setting.uses_demand() {
                assert_eq!(&row[c - 4..], &[-1.0, -2.0, -3.0, -4.0]);
            }
            assert_eq!(w[1].target, (17..22).map(|t| 10_000.0 + t as f64).collect::<Vec<_>>());
        }
    }

    #[test]
    fn unknown_target_is_an_error() {
        let f = frame(50, 1);
        assert!(make_windows(&f, "nope", 10, 5, 1, FeatureSetting::TargetOnly).is_err());
    }

    proptest! {
        #[test]
        fn count_formula(len in 1usize..300, w in 1usize..60, h in 1usize..60, stride in 1usize..40) {
            let f = frame(len, 1);
            let got = make_windows(&f, "L0", w, h, stride, FeatureSetting::TargetOnly).unwrap();
            let expect = if len >= w + h { (len - w - h) / stride + 1 } else { 0 };
            prop_assert_eq!(got.len(), expect);
            if let Some(last) = got.last() {
                prop_assert!(last.offset + w + h <= len);
            }
        }
    }

    #[test]
    fn padding_inserts_zero_lot_channels_before_demand() {
        let s = WindowSample {
            input: vec![1.0, 2.0, 9.0, 9.0, 9.0, 9.0, 3.0, 4.0, 8.0, 8.0, 8.0, 8.0],
            window: 2,
            channels: 6,
            input_start: Timestamp(0),
            step: 600,
            target: vec![0.5],
            target_lot: "A".into(),
            zone_id: "Z".into(),
            setting: FeatureSetting::AllLotsWithDemand,
            offset: 0,
        };
        let p = pad_lot_channels(&s, 3).unwrap();
        assert_eq!(p.channels, 7);
        assert_eq!(p.input[..7], [1.0, 2.0, 0.0, 9.0, 9.0, 9.0, 9.0]);
        assert_eq!(p.target_history(), vec![1.0, 3.0]);
        assert!(pad_lot_channels(&s, 1).is_err());
        let t = WindowSample { setting: FeatureSetting::TargetOnly, channels: 1, input: vec![1.0, 3.0], ..s };
        assert_eq!(pad_lot_channels(&t, 3).unwrap(), t);
    }
}
