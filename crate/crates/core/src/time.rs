//! Wall-clock timestamps.
//!
//! Times are local wall-clock readings stored as whole seconds since
//! 1970-01-01T00:00 of the same (unnamed) zone. No timezone conversion is
//! ever applied.

use std::fmt;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

const FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
];

impl Timestamp {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        for fmt in FORMATS {
            if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
                return Ok(Self::from_naive(dt));
            }
        }
        Err(Error::Data(format!("unparseable timestamp {s:?}")))
    }

    pub fn from_naive(dt: NaiveDateTime) -> Self {
        Timestamp(dt.and_utc().timestamp())
    }

    pub fn from_ymd_hms(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> Self {
        let dt = NaiveDate::from_ymd_opt(y, mo, d)
            .and_then(|d| d.and_hms_opt(h, mi, s))
            .expect("valid calendar fields");
        Self::from_naive(dt)
    }

    pub fn naive(self) -> NaiveDateTime {
        DateTime::from_timestamp(self.0, 0)
            .expect("timestamp in chrono range")
            .naive_utc()
    }

    pub fn date(self) -> NaiveDate {
        self.naive().date()
    }

    pub fn seconds(self) -> i64 {
        self.0
    }

    pub fn plus(self, secs: i64) -> Self {
        Timestamp(self.0 + secs)
    }

    /// Fractional hour of day in `[0, 24)`.
    pub fn hour_of_day(self) -> f64 {
        let t = self.naive();
        t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0
    }

    /// Fractional day of week in `[0, 7)`, Monday = 0.
    pub fn day_of_week(self) -> f64 {
        self.naive().weekday().num_days_from_monday() as f64 + self.hour_of_day() / 24.0
    }

    /// Fractional day of month in `[0, 31)`, first day = 0.
    pub fn day_of_month(self) -> f64 {
        self.naive().day0() as f64 + self.hour_of_day() / 24.0
    }

    /// Fractional month of year in `[0, 12)`, January = 0.
    pub fn month_of_year(self) -> f64 {
        let t = self.naive();
        let days_in_month = days_in_month(t.year(), t.month()) as f64;
        t.month0() as f64 + self.day_of_month() / days_in_month
    }

    pub fn weekday_index(self) -> u32 {
        self.naive().weekday().num_days_from_monday()
    }

    pub fn seconds_of_day(self) -> i64 {
        self.0.rem_euclid(86_400)
    }

    pub fn to_iso(self) -> String {
        self.naive().format("%Y-%m-%dT%H:%M:%S").to_string()
    }
}

fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let next = NaiveDate::from_ymd_opt(ny, nm, 1).expect("valid month");
    (next - first).num_days() as u32
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minute_and_second_precision() {
        let a = Timestamp::parse("2021-09-01T08:00").unwrap();
        let b = Timestamp::parse("2021-09-01T08:00:00").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hour_of_day(), 8.0);
        assert_eq!(a.to_iso(), "2021-09-01T08:00:00");
    }

    #[test]
    fn calendar_fields() {
        // 2021-09-01 was a Wednesday.
        let t = Timestamp::from_ymd_hms(2021, 9, 1, 12, 0, 0);
        assert_eq!(t.weekday_index(), 2);
        assert!((t.day_of_week() - 2.5).abs() < 1e-12);
        assert!((t.day_of_month() - 0.5).abs() < 1e-12);
        assert!((t.month_of_year() - (8.0 + 0.5 / 30.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Timestamp::parse("yesterday").is_err());
    }
}
