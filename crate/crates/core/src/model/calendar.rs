//! Timestamp encodings: a sine/cosine pair per periodic calendar feature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalendarFeature {
    /// Hour of day, period 24.
    Hour,
    /// Day of week, period 7.
    DayOfWeek,
    /// Day of month, period 31.
    DayOfMonth,
    /// Month of year, period 12.
    Month,
}

impl CalendarFeature {
    pub fn period(self) -> f64 {
        match self {
            CalendarFeature::Hour => 24.0,
            CalendarFeature::DayOfWeek => 7.0,
            CalendarFeature::DayOfMonth => 31.0,
            CalendarFeature::Month => 12.0,
        }
    }

    /// Fractional value of the feature at `t`, in `[0, period)`.
    pub fn value(self, t: Timestamp) -> f64 {
        match self {
            CalendarFeature::Hour => t.hour_of_day(),
            CalendarFeature::DayOfWeek => t.day_of_week(),
            CalendarFeature::DayOfMonth => t.day_of_month(),
            CalendarFeature::Month => t.month_of_year(),
        }
    }
}

/// `(sin(v * 2pi / T), cos(v * 2pi / T))`
pub fn encode_value(v: f64, period: f64) -> (f64, f64) {
    (v * 2.0 * PI / period).sin_cos()
}

/// `[sin, cos]` per feature, in the given order.
pub fn calendar_encoding(t: Timestamp, features: &[CalendarFeature]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * features.len());
    for f in features {
        let (s, c) = encode_value(f.value(t), f.period());
        out.push(s);
        out.push(c);
    }
    out
}
