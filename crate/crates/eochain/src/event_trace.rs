//! Fixed fire-event traces as CSV: `id,lat,lon,start_s,area_ha`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use eochain_core::{EventId, FireEvent, GeoPoint};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    id: u64,
    lat: f64,
    lon: f64,
    start_s: f64,
    area_ha: f64,
}

pub fn read_events(reader: impl Read) -> Result<Vec<FireEvent>, csv::Error> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .map(|row| {
            let r: Row = row?;
            Ok(FireEvent { id: EventId(r.id), location: GeoPoint::new(r.lat, r.lon), start_s: r.start_s, area_ha: r.area_ha })
        })
        .collect()
}

pub fn write_events(writer: impl Write, events: &[FireEvent]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for e in events {
        w.serialize(Row { id: e.id.0, lat: e.location.lat, lon: e.location.lon, start_s: e.start_s, area_ha: e.area_ha })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads and sanity-checks a trace file.
pub fn load(path: &Path) -> Result<Vec<FireEvent>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let events = read_events(file).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!(),
        },
        _ => CliError::Format { path: path.to_path_buf(), message: e.to_string() },
    })?;
    for e in &events {
        let ok = e.start_s.is_finite() && e.start_s >= 0.0 && e.area_ha.is_finite() && e.area_ha > 0.0
            && (-90.0..=90.0).contains(&e.location.lat);
        if !ok {
            return Err(CliError::Format { path: path.to_path_buf(), message: format!("event {} is out of range", e.id) });
        }
    }
    Ok(events)
}
