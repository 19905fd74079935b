//! Canonical CSV format: `user,timestamp,lat,lon`.
//!
//! Timestamps are read as integer epoch seconds or ISO-8601 (UTC when no
//! offset is given) and always written as integer epoch seconds. Coordinates
//! are written with seven decimals, so any file this module writes reads
//! back to the same dataset and re-writes byte-identically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};

use crate::attack::PoiMap;
use crate::error::IoError;
use crate::geo::Location;
use crate::model::{Dataset, Record, Timestamp, UserId};

pub const HEADER: [&str; 4] = ["user", "timestamp", "lat", "lon"];
pub const POI_HEADER: [&str; 6] = ["user", "lat", "lon", "start", "end", "count"];

pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset, IoError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv_from(BufReader::new(file))
}

pub fn read_csv_from<R: Read>(reader: R) -> Result<Dataset, IoError> {
    let records = read_records(reader)?;
    Ok(Dataset::from_records(records))
}

/// Parses rows without grouping them, in file order.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<Record>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    if header.len() != HEADER.len() || header.iter().zip(HEADER).any(|(a, b)| a != b) {
        return Err(IoError::BadHeader(header.iter().collect::<Vec<_>>().join(",")));
    }

    let mut out = Vec::new();
    let mut row = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut row).map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            IoError::Malformed {
                line,
                message: e.to_string(),
            }
        })?;
        if !more {
            break;
        }
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        out.push(parse_row(&row).map_err(|message| IoError::Malformed { line, message })?);
    }
    Ok(out)
}

fn parse_row(row: &csv::StringRecord) -> Result<Record, String> {
    if row.len() != 4 {
        return Err(format!("expected 4 fields, found {}", row.len()));
    }
    let user = UserId::new(&row[0]).map_err(|e| e.to_string())?;
    let time = parse_timestamp(&row[1])?;
    let lat: f64 = row[2]
        .parse()
        .map_err(|_| format!("invalid latitude `{}`", &row[2]))?;
    let lon: f64 = row[3]
        .parse()
        .map_err(|_| format!("invalid longitude `{}`", &row[3]))?;
    let loc = Location::new(lat, lon).map_err(|e| e.to_string())?;
    Ok(Record::new(user, loc, time))
}

/// Integer epoch seconds, RFC 3339, or a naive `YYYY-MM-DD[T ]HH:MM:SS`
/// taken as UTC.
pub fn parse_timestamp(s: &str) -> Result<Timestamp, String> {
    if let Ok(t) = s.parse::<i64>() {
        return Ok(t);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.and_utc().timestamp());
        }
    }
    Err(format!("invalid timestamp `{s}`"))
}

pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<(), IoError> {
    let mut w = create(path.as_ref())?;
    write_csv_to(d, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes traces in user-id order and records in time order.
pub fn write_csv_to<W: Write>(d: &Dataset, writer: W) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(HEADER)?;
    for trace in d.traces() {
        let user = trace.user().as_str();
        for fix in trace.fixes() {
            let time = fix.time.to_string();
            let lat = format!("{:.7}", fix.loc.lat());
            let lon = format!("{:.7}", fix.loc.lon());
            w.write_record([user, time.as_str(), lat.as_str(), lon.as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    let file = File::create(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufWriter::new(file))
}

pub fn write_pois(pois: &PoiMap, path: impl AsRef<Path>) -> Result<(), IoError> {
    let mut w = create(path.as_ref())?;
    write_pois_to(pois, &mut w)?;
    w.flush()?;
    Ok(())
}

/// One row per POI: `user,lat,lon,start,end,count`, users in id order and
/// POIs in time order.
pub fn write_pois_to<W: Write>(pois: &PoiMap, writer: W) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(POI_HEADER)?;
    for (user, list) in pois {
        for p in list {
            w.write_record([
                user.as_str(),
                &format!("{:.7}", p.center.lat()),
                &format!("{:.7}", p.center.lon()),
                &p.start.to_string(),
                &p.end.to_string(),
                &p.record_count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
