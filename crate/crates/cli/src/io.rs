//! Reading series and tables, and writing artifacts atomically.

use std::fs;
use std::io::Write;
use std::path::Path;

use mesa::types::{Sided, SpectralDensity, TimeSeries};
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::CliError;

/// Relative tolerance on the spacing of a `time,value` file.
const SPACING_TOL: f64 = 1e-9;

/// Numeric rows of a CSV file. A first row that does not parse is taken as
/// a header and skipped.
pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(path, e))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::input(path, e))?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(CliError::input(path, format!("row {}: {e}", i + 1)));
            }
        }
    }
    if let Some(w) = rows.first().map(Vec::len) {
        if let Some(bad) = rows.iter().position(|r| r.len() != w) {
            return Err(CliError::input(path, format!("row {} has a different width", bad + 1)));
        }
    }
    Ok(rows)
}

/// Loads a series from one-column CSV (needs `dt`), two-column `time,value`
/// CSV, or raw little-endian f64 (needs `dt`).
pub fn read_series(path: &Path, dt: Option<f64>, binary: bool) -> Result<TimeSeries, CliError> {
    if binary {
        let dt = dt.ok_or_else(|| CliError::Usage("--binary needs --dt".into()))?;
        let bytes = fs::read(path).map_err(|e| CliError::input(path, e))?;
        if bytes.len() % 8 != 0 {
            return Err(CliError::input(path, "length is not a multiple of 8 bytes"));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        return Ok(TimeSeries::new(samples, dt)?);
    }
    let rows = read_rows(path)?;
    match rows.first().map(Vec::len) {
        None => Err(CliError::input(path, "no data rows")),
        Some(1) => {
            let dt = dt.ok_or_else(|| CliError::Usage("single-column input needs --dt".into()))?;
            Ok(TimeSeries::new(rows.into_iter().map(|r| r[0]).collect(), dt)?)
        }
        Some(2) => {
            if rows.len() < 2 {
                return Err(CliError::input(path, "need at least two rows"));
            }
            let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let step = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
            for (i, w) in t.windows(2).enumerate() {
                if ((w[1] - w[0]) - step).abs() > SPACING_TOL * step.abs() {
                    return Err(CliError::input(
                        path,
                        format!("non-uniform time spacing at row {}", i + 2),
                    ));
                }
            }
            if let Some(dt) = dt {
                if (dt - step).abs() > SPACING_TOL * step.abs() {
                    return Err(CliError::Usage(format!(
                        "--dt {dt} disagrees with the file spacing {step}"
                    )));
                }
            }
            Ok(TimeSeries::new(rows.into_iter().map(|r| r[1]).collect(), step)?)
        }
        Some(w) => Err(CliError::input(path, format!("expected 1 or 2 columns, found {w}"))),
    }
}

/// A `frequency,psd` table.
pub fn read_table(path: &Path, sided: Sided) -> Result<SpectralDensity, CliError> {
    let rows = read_rows(path)?;
    if rows.first().map(Vec::len) != Some(2) {
        return Err(CliError::input(path, "expected two columns: frequency,psd"));
    }
    let (f, v) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
    Ok(SpectralDensity::new(f, v, sided)?)
}

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::output(path, e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::output(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::output(path, e))?;
    tmp.persist(path).map_err(|e| CliError::output(path, e.error))?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &[String], columns: &[&[f64]]) -> Result<(), CliError> {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| fmt(c[i])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn write_psd(path: &Path, sd: &SpectralDensity) -> Result<(), CliError> {
    write_csv(
        path,
        &["frequency_hz".into(), "psd".into()],
        &[sd.freqs(), sd.values()],
    )
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::output(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CliError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| CliError::output(path, e))?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}
