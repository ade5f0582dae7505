//! Fixed-interval availability series, denoising, supervised windows and
//! the zone-wise train/test split.

mod columnar;
mod fourier;
mod occupancy;
mod split;
mod windows;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Timestamp;

pub use columnar::{read_columnar, write_columnar, Columnar};
pub use fourier::{fourier_denoise, fourier_lowpass};
pub use occupancy::{build_occupancy_series, AvailabilitySeries};
pub use split::{split_by_zone, split_ids, SplitPlan};
pub use windows::{make_windows, pad_lot_channels, window_count, FeatureSetting, WindowSample};

/// Default grid step: 10 minutes.
pub const DEFAULT_STEP_SECS: i64 = 600;
/// Default input window length (3 days of 10-minute steps).
pub const DEFAULT_WINDOW: usize = 432;
/// Default forecast horizon (1 day of 10-minute steps).
pub const DEFAULT_HORIZON: usize = 144;

/// A regular time grid: instants `start + i * step` for `i in 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub start: Timestamp,
    pub step: i64,
    pub len: usize,
}

impl Grid {
    pub fn new(start: Timestamp, step: i64, len: usize) -> Result<Self> {
        if step <= 0 {
            return Err(Error::Parameter(format!("grid step must be positive, got {step}")));
        }
        Ok(Self { start, step, len })
    }

    /// Grid covering `[start, end)` at `step`.
    pub fn spanning(start: Timestamp, end: Timestamp, step: i64) -> Result<Self> {
        if end <= start {
            return Err(Error::Parameter("grid end must follow start".into()));
        }
        let len = ((end.0 - start.0) + step - 1) / step;
        Self::new(start, step, len as usize)
    }

    pub fn instant(&self, i: usize) -> Timestamp {
        Timestamp(self.start.0 + i as i64 * self.step)
    }

    pub fn end(&self) -> Timestamp {
        self.instant(self.len)
    }

    /// Index of the bin `[t_i, t_i + step)` holding `t`, if inside the grid.
    pub fn bin_of(&self, t: Timestamp) -> Option<usize> {
        let off = t.0 - self.start.0;
        if off < 0 {
            return None;
        }
        let i = (off / self.step) as usize;
        (i < self.len).then_some(i)
    }

    pub fn check_aligned(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::Alignment(format!(
                "grid {}+{}s x{} does not match {}+{}s x{}",
                self.start, self.step, self.len, other.start, other.step, other.len
            )));
        }
        Ok(())
    }
}
