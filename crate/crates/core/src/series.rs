//! Core time-series types: sensor identity, points and validated series.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// UTC instant as whole seconds since the Unix epoch.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Globally unique sensor identity, shared by every sensor category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensorId(pub u64);

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for SensorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse()
            .map(SensorId)
            .map_err(|_| Error::Parse(format!("invalid sensor id {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub timestamp: Timestamp,
    pub value: f64,
}

impl TimePoint {
    pub const fn new(timestamp: Timestamp, value: f64) -> Self {
        Self { timestamp, value }
    }
}

impl From<(Timestamp, f64)> for TimePoint {
    fn from((timestamp, value): (Timestamp, f64)) -> Self {
        Self { timestamp, value }
    }
}

/// Linear interpolation between `a` and `b` evaluated at `t`.
///
/// Every component that compares a value against a chord (simplification,
/// reconstruction, resampling, materialized queries) goes through this one
/// function so that the epsilon bound holds bit-for-bit.
#[inline]
pub fn lerp(a: &TimePoint, b: &TimePoint, t: Timestamp) -> f64 {
    if t == a.timestamp {
        return a.value;
    }
    if t == b.timestamp {
        return b.value;
    }
    let span = (b.timestamp - a.timestamp) as f64;
    let frac = (t - a.timestamp) as f64 / span;
    a.value + (b.value - a.value) * frac
}

/// Ordered points of a single sensor.
///
/// Construction rejects non-finite values and non-increasing timestamps, so
/// every `TimeSeries` in circulation is valid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    sensor: SensorId,
    points: Vec<TimePoint>,
}

impl TimeSeries {
    pub fn new(sensor: SensorId, points: Vec<TimePoint>) -> Result<Self> {
        for p in &points {
            if !p.value.is_finite() {
                return Err(Error::NonFinite {
                    timestamp: p.timestamp,
                    value: p.value,
                });
            }
        }
        if let Some(w) = points.windows(2).find(|w| w[0].timestamp >= w[1].timestamp) {
            return Err(Error::Ordering(format!(
                "timestamps not strictly increasing: {} then {}",
                w[0].timestamp, w[1].timestamp
            )));
        }
        Ok(Self { sensor, points })
    }

    pub fn from_pairs(sensor: SensorId, pairs: &[(Timestamp, f64)]) -> Result<Self> {
        Self::new(sensor, pairs.iter().copied().map(TimePoint::from).collect())
    }

    pub fn empty(sensor: SensorId) -> Self {
        Self {
            sensor,
            points: Vec::new(),
        }
    }

    /// Skips validation; callers must uphold the invariants.
    pub(crate) fn from_trusted(sensor: SensorId, points: Vec<TimePoint>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        Self { sensor, points }
    }

    pub fn sensor(&self) -> SensorId {
        self.sensor
    }

    pub fn points(&self) -> &[TimePoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<TimePoint> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Option<&TimePoint> {
        self.points.first()
    }

    pub fn last(&self) -> Option<&TimePoint> {
        self.points.last()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = Timestamp> + '_ {
        self.points.iter().map(|p| p.timestamp)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    /// Points with `start <= timestamp <= end`.
    pub fn slice(&self, start: Timestamp, end: Timestamp) -> TimeSeries {
        let lo = self.points.partition_point(|p| p.timestamp < start);
        let hi = self.points.partition_point(|p| p.timestamp <= end);
        let points = if lo < hi {
            self.points[lo..hi].to_vec()
        } else {
            Vec::new()
        };
        TimeSeries::from_trusted(self.sensor, points)
    }
}

/// Interval between two stored points across which no values may be
/// interpolated (a data outage).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Gap {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Gap {
    pub fn new(start: Timestamp, end: Timestamp) -> Self {
        Self { start, end }
    }

    /// Strictly inside the gap; the bounding points themselves are data.
    pub fn covers(&self, t: Timestamp) -> bool {
        self.start < t && t < self.end
    }
}

/// UTC calendar day containing `ts`.
pub fn day_of(ts: Timestamp) -> NaiveDate {
    let days = ts.div_euclid(SECONDS_PER_DAY);
    NaiveDate::from_num_days_from_ce_opt(days as i32 + UNIX_EPOCH_CE_DAYS)
        .expect("timestamp within chrono's calendar range")
}

/// First second of `day` in UTC.
pub fn day_start(day: NaiveDate) -> Timestamp {
    (day.num_days_from_ce() - UNIX_EPOCH_CE_DAYS) as i64 * SECONDS_PER_DAY
}

const UNIX_EPOCH_CE_DAYS: i32 = 719_163;

/// Parses either integer epoch seconds or an ISO-8601/RFC 3339 UTC instant.
pub fn parse_timestamp(s: &str) -> Result<Timestamp> {
    let s = s.trim();
    if let Ok(secs) = s.parse::<i64>() {
        return Ok(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.and_utc().timestamp());
        }
    }
    Err(Error::Parse(format!("invalid timestamp {s:?}")))
}

/// ISO-8601 rendering with a `Z` suffix.
pub fn format_timestamp(ts: Timestamp) -> String {
    match DateTime::<Utc>::from_timestamp(ts, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => ts.to_string(),
    }
}

pub fn now() -> Timestamp {
    Utc::now().timestamp()
}
