//! Getting raw samples into the store.
//!
//! Live samples go through a durable [`StagingStore`]; a periodic mover
//! ([`run_mover`], scheduled by [`run_daemon`]) snapshots each sensor's
//! buffer, resamples it to 1 Hz, compresses it and appends the result.
//! Whole files skip staging and go through [`ingest_file`].

mod daemon;
mod file;
mod mover;
mod resample;
mod staging;

use std::collections::BTreeMap;
use std::time::Duration;

pub use daemon::{run_daemon, spawn_daemon, DaemonHandle, TickReport, DEFAULT_SEAL_GRACE_SECS};
pub use file::{ingest_file, read_csv, CsvBatch, FileIngest, RowError, SensorMap};
pub use mover::{run_mover, run_mover_with_fault, MoverFault};
pub use resample::{resample_1s, Resampled};
pub use staging::{Snapshot, StagingStore};

use crate::error::{Error, Result};
use crate::rdp::{DistanceMetric, Epsilon};
use crate::series::{Gap, SensorId, Timestamp};

#[derive(Debug, Clone, PartialEq)]
pub struct MoverConfig {
    pub period: Duration,
    /// Widest spacing, in seconds, that resampling may bridge by interpolation.
    pub max_gap: i64,
    pub default_epsilon: Epsilon,
    pub epsilons: BTreeMap<SensorId, Epsilon>,
    pub metric: DistanceMetric,
}

impl Default for MoverConfig {
    fn default() -> Self {
        Self {
            period: Duration::from_secs(300),
            max_gap: 600,
            default_epsilon: Epsilon::new(5.0).expect("valid"),
            epsilons: BTreeMap::new(),
            metric: DistanceMetric::Vertical,
        }
    }
}

impl MoverConfig {
    pub fn epsilon_for(&self, sensor: SensorId) -> Epsilon {
        self.epsilons.get(&sensor).copied().unwrap_or(self.default_epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.period.is_zero() {
            return Err(Error::InvalidArgument("mover period must be positive".into()));
        }
        if self.max_gap < 1 {
            return Err(Error::InvalidArgument("max_gap must be at least 1 s".into()));
        }
        self.metric.validate()
    }
}

/// Outcome of moving (or ingesting) one sensor's batch.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveReport {
    pub sensor: SensorId,
    /// First and last timestamps of the source data; `None` when skipped.
    pub range: Option<(Timestamp, Timestamp)>,
    pub staged_count: usize,
    /// Source points dropped because the store already covers their time.
    pub late_count: usize,
    pub resampled_count: usize,
    pub kept_count: usize,
    pub appended_count: usize,
    pub gaps: Vec<Gap>,
    pub epsilon: Epsilon,
    pub executed_at: Timestamp,
}

impl MoveReport {
    pub(crate) fn skipped(sensor: SensorId, staged_count: usize, epsilon: Epsilon, executed_at: Timestamp) -> Self {
        Self {
            sensor,
            range: None,
            staged_count,
            late_count: 0,
            resampled_count: 0,
            kept_count: 0,
            appended_count: 0,
            gaps: Vec::new(),
            epsilon,
            executed_at,
        }
    }

    pub const CSV_HEADER: [&'static str; 11] = [
        "sensor",
        "first",
        "last",
        "staged_count",
        "late_count",
        "resampled_count",
        "kept_count",
        "appended_count",
        "gap_count",
        "epsilon",
        "executed_at",
    ];

    pub fn csv_record(&self) -> [String; 11] {
        let (first, last) = match self.range {
            Some((f, l)) => (f.to_string(), l.to_string()),
            None => (String::new(), String::new()),
        };
        [
            self.sensor.to_string(),
            first,
            last,
            self.staged_count.to_string(),
            self.late_count.to_string(),
            self.resampled_count.to_string(),
            self.kept_count.to_string(),
            self.appended_count.to_string(),
            self.gaps.len().to_string(),
            self.epsilon.to_string(),
            self.executed_at.to_string(),
        ]
    }
}
