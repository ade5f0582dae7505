//! Raw record ingestion: parking stays and multi-modal trips.
//!
//! Parsing never discards rows. Every data row becomes a raw row whose
//! cells are `Present`, `Missing` or `Malformed`; [`validate_and_drop`]
//! then turns raw rows into clean records and reconciles the counts in a
//! [`DropReport`].

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Timestamp;

const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A location in projected meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TravelMode {
    Metro,
    Bus,
    RideHailing,
    Taxi,
}

impl TravelMode {
    /// Fixed channel order used by demand series and feature frames.
    pub const ALL: [TravelMode; 4] = [
        TravelMode::Metro,
        TravelMode::Bus,
        TravelMode::RideHailing,
        TravelMode::Taxi,
    ];

    pub fn index(self) -> usize {
        match self {
            TravelMode::Metro => 0,
            TravelMode::Bus => 1,
            TravelMode::RideHailing => 2,
            TravelMode::Taxi => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TravelMode::Metro => "metro",
            TravelMode::Bus => "bus",
            TravelMode::RideHailing => "ride_hailing",
            TravelMode::Taxi => "taxi",
        }
    }

    /// Bus data only records boarding swipes.
    pub fn is_origin_only(self) -> bool {
        self == TravelMode::Bus
    }
}

impl fmt::Display for TravelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TravelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "metro" => Ok(TravelMode::Metro),
            "bus" => Ok(TravelMode::Bus),
            "ride_hailing" | "ride-hailing" | "ridehailing" => Ok(TravelMode::RideHailing),
            "taxi" => Ok(TravelMode::Taxi),
            other => Err(Error::Parameter(format!("unknown travel mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkingRecord {
    pub lot_id: String,
    pub arrival: Timestamp,
    pub departure: Timestamp,
    pub date: NaiveDate,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub mode: TravelMode,
    pub origin: Point,
    pub destination: Option<Point>,
    pub depart_time: Timestamp,
    pub arrive_time: Option<Timestamp>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    pub total_rows: usize,
    pub dropped_missing: usize,
    pub dropped_invalid: usize,
    pub retained: usize,
}

impl DropReport {
    pub fn reconciles(&self) -> bool {
        self.total_rows == self.dropped_missing + self.dropped_invalid + self.retained
    }
}

/// One cell of a raw row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell<T> {
    Present(T),
    Missing,
    Malformed(String),
}

impl<T> Cell<T> {
    fn parse_with(raw: Option<&str>, f: impl FnOnce(&str) -> Option<T>) -> Self {
        match raw.map(str::trim) {
            None | Some("") => Cell::Missing,
            Some(s) if s.eq_ignore_ascii_case("null") || s.eq_ignore_ascii_case("nan") => {
                Cell::Missing
            }
            Some(s) => match f(s) {
                Some(v) => Cell::Present(v),
                None => Cell::Malformed(s.to_string()),
            },
        }
    }

    fn take(&self) -> std::result::Result<&T, DropReason> {
        match self {
            Cell::Present(v) => Ok(v),
            Cell::Missing => Err(DropReason::Missing),
            Cell::Malformed(_) => Err(DropReason::Invalid),
        }
    }

    fn optional(&self) -> std::result::Result<Option<&T>, DropReason> {
        match self {
            Cell::Present(v) => Ok(Some(v)),
            Cell::Missing => Ok(None),
            Cell::Malformed(_) => Err(DropReason::Invalid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Missing,
    Invalid,
}

/// Anything [`validate_and_drop`] can clean.
pub trait Validate {
    type Clean;

    fn validate(&self) -> std::result::Result<Self::Clean, DropReason>;
}

pub fn validate_and_drop<R: Validate>(
    rows: impl IntoIterator<Item = R>,
) -> (Vec<R::Clean>, DropReport) {
    let mut report = DropReport::default();
    let mut clean = Vec::new();
    for row in rows {
        report.total_rows += 1;
        match row.validate() {
            Ok(rec) => {
                report.retained += 1;
                clean.push(rec);
            }
            Err(DropReason::Missing) => report.dropped_missing += 1,
            Err(DropReason::Invalid) => report.dropped_invalid += 1,
        }
    }
    (clean, report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParkingRow {
    pub line: usize,
    pub lot_id: Cell<String>,
    pub arrival: Cell<Timestamp>,
    pub departure: Cell<Timestamp>,
    pub date: Cell<NaiveDate>,
    pub capacity: Cell<u32>,
}

impl ParkingRecord {
    fn check(&self) -> std::result::Result<(), DropReason> {
        if self.lot_id.is_empty() {
            return Err(DropReason::Missing);
        }
        if self.departure <= self.arrival || self.capacity == 0 {
            return Err(DropReason::Invalid);
        }
        if self.arrival.date() != self.date {
            return Err(DropReason::Invalid);
        }
        Ok(())
    }
}

impl Validate for ParkingRow {
    type Clean = ParkingRecord;

    fn validate(&self) -> std::result::Result<ParkingRecord, DropReason> {
        let rec = ParkingRecord {
            lot_id: self.lot_id.take()?.clone(),
            arrival: *self.arrival.take()?,
            departure: *self.departure.take()?,
            date: *self.date.take()?,
            capacity: *self.capacity.take()?,
        };
        rec.check()?;
        Ok(rec)
    }
}

impl Validate for ParkingRecord {
    type Clean = ParkingRecord;

    fn validate(&self) -> std::result::Result<ParkingRecord, DropReason> {
        self.check()?;
        Ok(self.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripRow {
    pub line: usize,
    pub mode: TravelMode,
    pub origin_x: Cell<f64>,
    pub origin_y: Cell<f64>,
    pub dest_x: Cell<f64>,
    pub dest_y: Cell<f64>,
    pub depart_time: Cell<Timestamp>,
    pub arrive_time: Cell<Timestamp>,
}

impl TripRecord {
    fn check(&self) -> std::result::Result<(), DropReason> {
        if !self.origin.x.is_finite() || !self.origin.y.is_finite() {
            return Err(DropReason::Invalid);
        }
        if self.mode.is_origin_only() {
            if self.destination.is_some() || self.arrive_time.is_some() {
                return Err(DropReason::Invalid);
            }
            return Ok(());
        }
        let (Some(d), Some(at)) = (self.destination, self.arrive_time) else {
            return Err(DropReason::Invalid);
        };
        if !d.x.is_finite() || !d.y.is_finite() || at < self.depart_time {
            return Err(DropReason::Invalid);
        }
        Ok(())
    }
}

impl Validate for TripRow {
    type Clean = TripRecord;

    fn validate(&self) -> std::result::Result<TripRecord, DropReason> {
        let origin = Point::new(*self.origin_x.take()?, *self.origin_y.take()?);
        let depart_time = *self.depart_time.take()?;
        let rec = if self.mode.is_origin_only() {
            TripRecord {
                mode: self.mode,
                origin,
                destination: None,
                depart_time,
                arrive_time: None,
            }
        } else {
            let dx = self.dest_x.optional()?;
            let dy = self.dest_y.optional()?;
            let destination = match (dx, dy) {
                (Some(x), Some(y)) => Some(Point::new(*x, *y)),
                _ => None,
            };
            TripRecord {
                mode: self.mode,
                origin,
                destination,
                depart_time,
                arrive_time: self.arrive_time.optional()?.copied(),
            }
        };
        rec.check()?;
        Ok(rec)
    }
}

impl Validate for TripRecord {
    type Clean = TripRecord;

    fn validate(&self) -> std::result::Result<TripRecord, DropReason> {
        self.check()?;
        Ok(self.clone())
    }
}

/// How coordinates in a trip file are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coordinates {
    /// Already in projected meters.
    #[default]
    Projected,
    /// Longitude/latitude degrees, projected equirectangularly around a reference point.
    LonLat { ref_lon: f64, ref_lat: f64 },
}

impl Coordinates {
    pub fn project(&self, a: f64, b: f64) -> Point {
        match *self {
            Coordinates::Projected => Point::new(a, b),
            Coordinates::LonLat { ref_lon, ref_lat } => {
                let x = EARTH_RADIUS_M * (a - ref_lon).to_radians() * ref_lat.to_radians().cos();
                let y = EARTH_RADIUS_M * (b - ref_lat).to_radians();
                Point::new(x, y)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParkingSchema {
    pub delimiter: char,
    pub lot_id: String,
    pub arrival: String,
    pub departure: String,
    pub date: String,
    pub capacity: String,
}

impl Default for ParkingSchema {
    fn default() -> Self {
        Self {
            delimiter: ',',
            lot_id: "lot_id".into(),
            arrival: "arrival".into(),
            departure: "departure".into(),
            date: "date".into(),
            capacity: "capacity".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TripSchema {
    pub delimiter: char,
    pub mode: String,
    pub origin_x: String,
    pub origin_y: String,
    pub dest_x: String,
    pub dest_y: String,
    pub depart_time: String,
    pub arrive_time: String,
    pub coordinates: Coordinates,
}

impl Default for TripSchema {
    fn default() -> Self {
        Self {
            delimiter: ',',
            mode: "mode".into(),
            origin_x: "o_x".into(),
            origin_y: "o_y".into(),
            dest_x: "d_x".into(),
            dest_y: "d_y".into(),
            depart_time: "depart_time".into(),
            arrive_time: "arrive_time".into(),
            coordinates: Coordinates::Projected,
        }
    }
}

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::Schema(format!("delimiter {c:?} is not a single ASCII byte")))
}

struct HeaderIndex(HashMap<String, usize>);

impl HeaderIndex {
    fn new(headers: &csv::StringRecord) -> Self {
        Self(
            headers
                .iter()
                .enumerate()
                .map(|(i, h)| (h.trim().to_string(), i))
                .collect(),
        )
    }

    fn required(&self, name: &str) -> Result<usize> {
        self.0
            .get(name)
            .copied()
            .ok_or_else(|| Error::Schema(format!("missing mandatory column {name:?}")))
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.0.get(name).copied()
    }
}

fn reader<R: Read>(source: R, delimiter: char) -> Result<csv::Reader<R>> {
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter_byte(delimiter)?)
        .has_headers(true)
        .flexible(true)
        .from_reader(source))
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parse a parking record file into raw rows, one per data row, in file order.
pub fn parse_parking_records<R: Read>(source: R, schema: &ParkingSchema) -> Result<Vec<ParkingRow>> {
    let mut rdr = reader(source, schema.delimiter)?;
    let idx = HeaderIndex::new(rdr.headers()?);
    let cols = [
        idx.required(&schema.lot_id)?,
        idx.required(&schema.arrival)?,
        idx.required(&schema.departure)?,
        idx.required(&schema.date)?,
        idx.required(&schema.capacity)?,
    ];
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| rec.get(i);
        rows.push(ParkingRow {
            line: n + 2,
            lot_id: Cell::parse_with(get(cols[0]), |s| Some(s.to_string())),
            arrival: Cell::parse_with(get(cols[1]), |s| Timestamp::parse(s).ok()),
            departure: Cell::parse_with(get(cols[2]), |s| Timestamp::parse(s).ok()),
            date: Cell::parse_with(get(cols[3]), parse_date),
            capacity: Cell::parse_with(get(cols[4]), |s| s.parse::<u32>().ok()),
        });
    }
    Ok(rows)
}

/// Parse a trip record file for one travel mode.
///
/// Destination and arrival columns may be absent from the header; for
/// bus sources they are ignored even when present.
pub fn parse_trip_records<R: Read>(
    source: R,
    mode: TravelMode,
    schema: &TripSchema,
) -> Result<Vec<TripRow>> {
    let mut rdr = reader(source, schema.delimiter)?;
    let idx = HeaderIndex::new(rdr.headers()?);
    let ox = idx.required(&schema.origin_x)?;
    let oy = idx.required(&schema.origin_y)?;
    let dep = idx.required(&schema.depart_time)?;
    let (dx, dy, arr) = if mode.is_origin_only() {
        (None, None, None)
    } else {
        (
            idx.optional(&schema.dest_x),
            idx.optional(&schema.dest_y),
            idx.optional(&schema.arrive_time),
        )
    };
    let coords = schema.coordinates;
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: Option<usize>| i.and_then(|i| rec.get(i));
        let mut row = TripRow {
            line: n + 2,
            mode,
            origin_x: Cell::parse_with(get(Some(ox)), parse_f64),
            origin_y: Cell::parse_with(get(Some(oy)), parse_f64),
            dest_x: Cell::parse_with(get(dx), parse_f64),
            dest_y: Cell::parse_with(get(dy), parse_f64),
            depart_time: Cell::parse_with(get(Some(dep)), |s| Timestamp::parse(s).ok()),
            arrive_time: Cell::parse_with(get(arr), |s| Timestamp::parse(s).ok()),
        };
        project_row(&mut row, coords);
        rows.push(row);
    }
    Ok(rows)
}

fn project_pair(x: &mut Cell<f64>, y: &mut Cell<f64>, coords: Coordinates) {
    if let (Cell::Present(a), Cell::Present(b)) = (&*x, &*y) {
        let p = coords.project(*a, *b);
        *x = Cell::Present(p.x);
        *y = Cell::Present(p.y);
    }
}

fn project_row(row: &mut TripRow, coords: Coordinates) {
    if coords == Coordinates::Projected {
        return;
    }
    project_pair(&mut row.origin_x, &mut row.origin_y, coords);
    project_pair(&mut row.dest_x, &mut row.dest_y, coords);
}

pub fn write_parking_records<W: Write>(sink: W, records: &[ParkingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["lot_id", "arrival", "departure", "date", "capacity"])?;
    for r in records {
        w.write_record([
            r.lot_id.clone(),
            r.arrival.to_iso(),
            r.departure.to_iso(),
            r.date.format("%Y-%m-%d").to_string(),
            r.capacity.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trip_records<W: Write>(sink: W, records: &[TripRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["mode", "o_x", "o_y", "d_x", "d_y", "depart_time", "arrive_time"])?;
    for r in records {
        let (dx, dy) = r
            .destination
            .map(|d| (d.x.to_string(), d.y.to_string()))
            .unwrap_or_default();
        w.write_record([
            r.mode.as_str().to_string(),
            r.origin.x.to_string(),
            r.origin.y.to_string(),
            dx,
            dy,
            r.depart_time.to_iso(),
            r.arrive_time.map(Timestamp::to_iso).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse and clean a parking file in one step.
pub fn read_parking_file(
    path: impl AsRef<Path>,
    schema: &ParkingSchema,
) -> Result<(Vec<ParkingRecord>, DropReport)> {
    let rows = parse_parking_records(File::open(path)?, schema)?;
    Ok(validate_and_drop(rows))
}

/// Parse and clean a trip file in one step.
pub fn read_trip_file(
    path: impl AsRef<Path>,
    mode: TravelMode,
    schema: &TripSchema,
) -> Result<(Vec<TripRecord>, DropReport)> {
    let rows = parse_trip_records(File::open(path)?, mode, schema)?;
    Ok(validate_and_drop(rows))
}

/// A lot location table row (`lot_id,x,y`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotLocation {
    pub lot_id: String,
    pub x: f64,
    pub y: f64,
}

pub fn read_lot_locations<R: Read>(source: R) -> Result<Vec<LotLocation>> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn write_lot_locations<W: Write>(sink: W, lots: &[LotLocation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for l in lots {
        w.serialize(l)?;
    }
    w.flush()?;
    Ok(())
}
