//! Columnar text: a `timestamp` column followed by one column per channel.

use std::io::{Read, Write};

use super::Grid;
use crate::error::{Error, Result};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq)]
pub struct Columnar {
    pub grid: Grid,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

pub fn write_columnar<W: Write>(sink: W, grid: &Grid, names: &[String], columns: &[&[f64]]) -> Result<()> {
    if names.len() != columns.len() {
        return Err(Error::Parameter("one name per column required".into()));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != grid.len) {
        return Err(Error::Alignment(format!(
            "column of length {} on a grid of {}",
            c.len(),
            grid.len
        )));
    }
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["timestamp".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(columns.len() + 1);
    for i in 0..grid.len {
        row.clear();
        row.push(grid.instant(i).to_iso());
        row.extend(columns.iter().map(|c| c[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_columnar<R: Read>(source: R) -> Result<Columnar> {
    let mut rdr = csv::Reader::from_reader(source);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("timestamp") {
        return Err(Error::Schema("first column must be `timestamp`".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut stamps = Vec::new();
    let mut columns = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec?;
        stamps.push(Timestamp::parse(&rec[0])?);
        for (c, col) in columns.iter_mut().enumerate() {
            let v: f64 = rec
                .get(c + 1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Data(format!("bad value in column {}", names[c])))?;
            col.push(v);
        }
    }
    let step = match stamps.as_slice() {
        [a, b, ..] => b.0 - a.0,
        _ => super::DEFAULT_STEP_SECS,
    };
    let start = stamps.first().copied().unwrap_or(Timestamp(0));
    let grid = Grid::new(start, step, stamps.len())?;
    if stamps.iter().enumerate().any(|(i, t)| *t != grid.instant(i)) {
        return Err(Error::Alignment("timestamps are not on a regular grid".into()));
    }
    Ok(Columnar { grid, names, columns })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let grid = Grid::new(Timestamp::from_ymd_hms(2021, 9, 1, 0, 0, 0), 600, 4).unwrap();
        let a = [0.1, 0.2 + 0.1, 1.0 / 3.0, 0.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let names = vec!["a".to_string(), "b".to_string()];
        let mut buf = Vec::new();
        write_columnar(&mut buf, &grid, &names, &[&a, &b]).unwrap();
        let back = read_columnar(buf.as_slice()).unwrap();
        assert_eq!(back.grid, grid);
        assert_eq!(back.names, names);
        assert_eq!(back.columns, vec![a.to_vec(), b.to_vec()]);
    }

    #[test]
    fn irregular_timestamps_rejected() {
        let text = "timestamp,a\n2021-09-01T00:00:00,1\n2021-09-01T00:10:00,1\n2021-09-01T00:30:00,1\n";
        assert!(matches!(read_columnar(text.as_bytes()), Err(Error::Alignment(_))));
    }
}
