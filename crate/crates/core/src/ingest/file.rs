//! Batch ingestion of whole CSV files.
//!
//! Format: a header row whose first column is `timestamp` (ISO-8601 UTC or
//! integer epoch seconds); every other column holds one sensor's values.
//! An empty cell means "no sample".

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::{parse_timestamp, SensorId, TimePoint, TimeSeries, Timestamp};
use crate::store::Store;

use super::mover::compress_runs;
use super::resample::resample_1s;
use super::{MoveReport, MoverConfig};

/// Which CSV column feeds which sensor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SensorMap {
    columns: BTreeMap<String, SensorId>,
}

impl SensorMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, column: impl Into<String>, sensor: SensorId) -> Self {
        self.insert(column, sensor);
        self
    }

    pub fn insert(&mut self, column: impl Into<String>, sensor: SensorId) {
        self.columns.insert(column.into(), sensor);
    }

    pub fn get(&self, column: &str) -> Option<SensorId> {
        self.columns.get(column).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Maps every header that is itself a sensor id.
    pub fn from_headers<'a>(headers: impl IntoIterator<Item = &'a str>) -> Self {
        let mut map = Self::new();
        for h in headers {
            if let Ok(id) = h.parse::<SensorId>() {
                map.insert(h, id);
            }
        }
        map
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the file.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileIngest {
    /// One report per mapped sensor column, in column order.
    pub reports: Vec<MoveReport>,
    pub row_errors: Vec<RowError>,
    pub valid_rows: usize,
}

/// Mapped columns of one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvBatch {
    /// Raw samples per mapped column, in column order.
    pub columns: Vec<(SensorId, Vec<TimePoint>)>,
    pub row_errors: Vec<RowError>,
    pub valid_rows: usize,
}

/// Reads every mapped column of the CSV at `path`. Malformed rows are
/// skipped and reported; a file without a single valid row is an error.
/// An empty `sensor_map` falls back to [`SensorMap::from_headers`].
pub fn read_csv(path: &Path, sensor_map: &SensorMap) -> Result<CsvBatch> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("{}: bad header: {e}", path.display())))?
        .clone();
    if headers.get(0) != Some("timestamp") {
        return Err(Error::Parse(format!(
            "{}: first column must be `timestamp`",
            path.display()
        )));
    }
    let map = if sensor_map.is_empty() {
        SensorMap::from_headers(headers.iter().skip(1))
    } else {
        sensor_map.clone()
    };
    let mapped: Vec<(usize, SensorId)> = headers
        .iter()
        .enumerate()
        .skip(1)
        .filter_map(|(i, h)| map.get(h).map(|s| (i, s)))
        .collect();
    if mapped.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{}: no column is mapped to a sensor",
            path.display()
        )));
    }
    for column in map.columns.keys() {
        if !headers.iter().any(|h| h == column) {
            return Err(Error::InvalidArgument(format!(
                "{}: mapped column {column:?} not in header",
                path.display()
            )));
        }
    }

    let mut per_sensor: Vec<Vec<TimePoint>> = vec![Vec::new(); mapped.len()];
    let mut row_errors = Vec::new();
    let mut valid_rows = 0usize;
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line() + 1;
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                row_errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        }
        match parse_row(&record, headers.len(), &mapped) {
            Ok((ts, cells)) => {
                valid_rows += 1;
                for (slot, v) in cells.into_iter().enumerate() {
                    if let Some(v) = v {
                        per_sensor[slot].push(TimePoint::new(ts, v));
                    }
                }
            }
            Err(message) => row_errors.push(RowError {
                line: record.position().map_or(line, |p| p.line()),
                message,
            }),
        }
    }
    if valid_rows == 0 {
        return Err(Error::Parse(format!("{}: no valid rows", path.display())));
    }
    if !row_errors.is_empty() {
        log::warn!("{}: skipped {} malformed rows", path.display(), row_errors.len());
    }
    Ok(CsvBatch {
        columns: mapped.into_iter().map(|(_, s)| s).zip(per_sensor).collect(),
        row_errors,
        valid_rows,
    })
}

/// Reads the CSV at `path` as by [`read_csv`], then resamples, compresses
/// and appends every mapped column.
pub fn ingest_file(
    path: &Path,
    sensor_map: &SensorMap,
    config: &MoverConfig,
    store: &Store,
    executed_at: Timestamp,
) -> Result<FileIngest> {
    config.validate()?;
    let batch = read_csv(path, sensor_map)?;
    let mut reports = Vec::with_capacity(batch.columns.len());
    for (sensor, raw) in &batch.columns {
        reports.push(ingest_column(*sensor, raw, config, store, executed_at)?);
    }
    Ok(FileIngest {
        reports,
        row_errors: batch.row_errors,
        valid_rows: batch.valid_rows,
    })
}

fn parse_row(
    record: &csv::StringRecord,
    width: usize,
    mapped: &[(usize, SensorId)],
) -> std::result::Result<(Timestamp, Vec<Option<f64>>), String> {
    if record.len() != width {
        return Err(format!("expected {width} fields, found {}", record.len()));
    }
    let ts = parse_timestamp(&record[0]).map_err(|e| e.to_string())?;
    let mut cells = Vec::with_capacity(mapped.len());
    for &(col, _) in mapped {
        let cell = &record[col];
        if cell.is_empty() {
            cells.push(None);
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => cells.push(Some(v)),
            _ => return Err(format!("invalid value {cell:?} in column {col}")),
        }
    }
    Ok((ts, cells))
}

fn ingest_column(
    sensor: SensorId,
    raw: &[TimePoint],
    config: &MoverConfig,
    store: &Store,
    executed_at: Timestamp,
) -> Result<MoveReport> {
    let epsilon = config.epsilon_for(sensor);
    let mut report = MoveReport::skipped(sensor, raw.len(), epsilon, executed_at);
    if raw.is_empty() {
        return Ok(report);
    }
    let first = raw.iter().map(|p| p.timestamp).min().expect("non-empty");
    let last = raw.iter().map(|p| p.timestamp).max().expect("non-empty");
    report.range = Some((first, last));

    let (kept, gaps, resampled_count) = if first == last {
        let only = *raw.last().expect("non-empty");
        (vec![only], Vec::new(), 1)
    } else {
        let resampled = resample_1s(sensor, raw, config.max_gap)?;
        let kept = compress_runs(&resampled, epsilon, config.metric)?;
        let count = resampled.series.len();
        (kept, resampled.gaps, count)
    };
    report.resampled_count = resampled_count;
    report.kept_count = kept.len();
    report.appended_count = store.append_with_gaps(sensor, &TimeSeries::new(sensor, kept)?, &gaps)?;
    report.gaps = gaps;
    Ok(report)
}
