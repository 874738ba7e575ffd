//! CSV and JSONL emitters and all-or-nothing file writes.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::channel::CsiSample;
use crate::constellation::CoverageWindow;
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;

/// Writes `bytes` to `path` through a temporary file in the same directory
/// renamed into place, so the target is either complete or untouched.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Serializes rows with a header line.
pub fn to_csv<R: Serialize>(rows: impl IntoIterator<Item = R>) -> io::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(io::Error::other)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

/// One JSON document per line.
pub fn to_jsonl<R: Serialize>(records: impl IntoIterator<Item = R>) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, &r)?;
        out.push(b'\n');
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct WindowRow {
    satellite_id: SatelliteId,
    ue_id: UeId,
    start_s: f64,
    end_s: f64,
    peak_elevation_deg: f64,
}

pub fn windows_csv<T: Scalar>(windows: &[CoverageWindow<T>]) -> io::Result<Vec<u8>> {
    to_csv(windows.iter().map(|w| WindowRow {
        satellite_id: w.satellite_id,
        ue_id: w.ground_point_id,
        start_s: w.start.as_f64(),
        end_s: w.end.as_f64(),
        peak_elevation_deg: w.peak_elevation_deg.as_f64(),
    }))
}

#[derive(Debug, Serialize)]
struct CsiRow {
    time_s: f64,
    sat_id: SatelliteId,
    ue_id: UeId,
    gain_db: f64,
    path_loss_db: f64,
    doppler_hz: f64,
}

/// CSI trace in the shared channel trace format.
pub fn csi_csv<'a, T: Scalar>(
    samples: impl IntoIterator<Item = &'a CsiSample<T>>,
) -> io::Result<Vec<u8>> {
    to_csv(samples.into_iter().map(|s| CsiRow {
        time_s: s.time.as_f64(),
        sat_id: s.satellite_id,
        ue_id: s.ue_id,
        gain_db: s.channel_gain_db.as_f64(),
        path_loss_db: s.path_loss_db.as_f64(),
        doppler_hz: s.doppler_hz.as_f64(),
    }))
}
