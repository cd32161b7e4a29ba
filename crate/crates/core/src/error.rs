//! Error type shared by every module of the crate.

use std::io;
use std::path::PathBuf;

use chrono::NaiveDate;

use crate::series::{SensorId, Timestamp};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("ordering violated: {0}")]
    Ordering(String),
    #[error("non-finite value {value} at timestamp {timestamp}")]
    NonFinite { timestamp: Timestamp, value: f64 },
    #[error("timestamp {timestamp} outside [{first}, {last}]")]
    OutOfRange {
        timestamp: Timestamp,
        first: Timestamp,
        last: Timestamp,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sensor {0} is not registered")]
    UnregisteredSensor(SensorId),
    #[error("unknown sensor {0}")]
    UnknownSensor(SensorId),
    #[error("day {day} of sensor {sensor} is sealed")]
    SealedSegment { sensor: SensorId, day: NaiveDate },
    #[error("sensor {sensor} already holds {existing} at {timestamp}, refusing {incoming}")]
    Conflict {
        sensor: SensorId,
        timestamp: Timestamp,
        existing: f64,
        incoming: f64,
    },
    #[error("nothing to seal for sensor {sensor} on {day}")]
    NothingToSeal { sensor: SensorId, day: NaiveDate },
    #[error("day {day} is not over yet")]
    NotYetSealable { day: NaiveDate },
    #[error("corrupt data in {path}: {reason}")]
    Corruption { path: PathBuf, reason: String },
    #[error("integrity violation: {0}")]
    Integrity(String),
    #[error("duplicate: {0}")]
    Duplicate(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("injected fault: {0}")]
    InjectedFault(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn corruption(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Corruption {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
