//! Durable per-sensor staging buffer for raw live samples.
//!
//! Every accepted sample is appended to `<dir>/<sensor>.stage` before
//! `stage()` returns. The mover takes a [`Snapshot`] of a sensor's buffer,
//! works on it without holding any lock, and finally deletes exactly the
//! entries it snapshotted; samples staged in the meantime survive even when
//! their timestamps fall inside the moved range.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use crate::error::{Error, Result};
use crate::framed::FramedLog;
use crate::series::{SensorId, TimePoint, Timestamp};

const STAGE_EXT: &str = "stage";

struct SensorLog {
    log: FramedLog,
    /// timestamp -> (value, arrival sequence number)
    entries: BTreeMap<Timestamp, (f64, u64)>,
    next_seq: u64,
}

impl SensorLog {
    fn insert(&mut self, p: TimePoint) {
        self.entries.insert(p.timestamp, (p.value, self.next_seq));
        self.next_seq += 1;
    }
}

/// Points of one sensor captured at a single instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub sensor: SensorId,
    /// Sorted by timestamp, one value per timestamp.
    pub points: Vec<TimePoint>,
    high_water: u64,
}

impl Snapshot {
    pub fn first(&self) -> Option<Timestamp> {
        self.points.first().map(|p| p.timestamp)
    }

    pub fn last(&self) -> Option<Timestamp> {
        self.points.last().map(|p| p.timestamp)
    }
}

pub struct StagingStore {
    dir: PathBuf,
    sync: bool,
    registered: RwLock<HashSet<SensorId>>,
    logs: RwLock<HashMap<SensorId, Arc<Mutex<SensorLog>>>>,
    move_locks: Mutex<HashMap<SensorId, Arc<Mutex<()>>>>,
}

fn encode_point(p: &TimePoint) -> [u8; 16] {
    let mut buf = [0u8; 16];
    buf[..8].copy_from_slice(&p.timestamp.to_le_bytes());
    buf[8..].copy_from_slice(&p.value.to_le_bytes());
    buf
}

impl StagingStore {
    /// Opens the staging directory, replaying every sensor log found there.
    /// Sensors with an existing log count as registered.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(dir, true)
    }

    pub fn open_with(dir: impl AsRef<Path>, sync: bool) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut logs = HashMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some(STAGE_EXT) {
                continue;
            }
            let Some(sensor) = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse::<SensorId>().ok())
            else {
                continue;
            };
            logs.insert(sensor, Arc::new(Mutex::new(Self::replay(&path, sync)?)));
        }
        let registered = logs.keys().copied().collect();
        Ok(Self {
            dir,
            sync,
            registered: RwLock::new(registered),
            logs: RwLock::new(logs),
            move_locks: Mutex::new(HashMap::new()),
        })
    }

    fn replay(path: &Path, sync: bool) -> Result<SensorLog> {
        let (log, frames) = FramedLog::open(path, sync)?;
        let mut sensor_log = SensorLog {
            log,
            entries: BTreeMap::new(),
            next_seq: 0,
        };
        for f in frames {
            let bytes: [u8; 16] = f
                .as_slice()
                .try_into()
                .map_err(|_| Error::corruption(path, "staging record of wrong size"))?;
            sensor_log.insert(TimePoint::new(
                i64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(bytes[8..].try_into().expect("8 bytes")),
            ));
        }
        Ok(sensor_log)
    }

    pub fn register(&self, sensor: SensorId) {
        self.registered.write().expect("staging lock poisoned").insert(sensor);
    }

    pub fn is_registered(&self, sensor: SensorId) -> bool {
        self.registered.read().expect("staging lock poisoned").contains(&sensor)
    }

    fn log(&self, sensor: SensorId) -> Result<Arc<Mutex<SensorLog>>> {
        if let Some(l) = self.logs.read().expect("staging lock poisoned").get(&sensor) {
            return Ok(l.clone());
        }
        let mut logs = self.logs.write().expect("staging lock poisoned");
        if let Some(l) = logs.get(&sensor) {
            return Ok(l.clone());
        }
        let path = self.dir.join(format!("{sensor}.{STAGE_EXT}"));
        let l = Arc::new(Mutex::new(Self::replay(&path, self.sync)?));
        logs.insert(sensor, l.clone());
        Ok(l)
    }

    /// Durably appends one raw sample. A later sample with the same
    /// timestamp replaces the earlier one.
    pub fn stage(&self, sensor: SensorId, point: TimePoint) -> Result<()> {
        if !self.is_registered(sensor) {
            return Err(Error::UnregisteredSensor(sensor));
        }
        if !point.value.is_finite() {
            return Err(Error::NonFinite {
                timestamp: point.timestamp,
                value: point.value,
            });
        }
        let log = self.log(sensor)?;
        let mut log = log.lock().expect("sensor log poisoned");
        log.log.append(&encode_point(&point))?;
        log.insert(point);
        Ok(())
    }

    /// Number of distinct staged timestamps for `sensor`.
    pub fn len(&self, sensor: SensorId) -> usize {
        match self.logs.read().expect("staging lock poisoned").get(&sensor) {
            Some(l) => l.lock().expect("sensor log poisoned").entries.len(),
            None => 0,
        }
    }

    pub fn is_empty(&self, sensor: SensorId) -> bool {
        self.len(sensor) == 0
    }

    /// Currently staged points of `sensor`, sorted.
    pub fn points(&self, sensor: SensorId) -> Vec<TimePoint> {
        self.snapshot(sensor).map(|s| s.points).unwrap_or_default()
    }

    pub fn snapshot(&self, sensor: SensorId) -> Option<Snapshot> {
        let log = self.logs.read().expect("staging lock poisoned").get(&sensor)?.clone();
        let log = log.lock().expect("sensor log poisoned");
        Some(Snapshot {
            sensor,
            points: log.entries.iter().map(|(&t, &(v, _))| TimePoint::new(t, v)).collect(),
            high_water: log.next_seq,
        })
    }

    /// Removes exactly the entries captured by `snapshot`: timestamps in its
    /// `[first, last]` range that have not been overwritten since.
    pub fn delete_snapshot(&self, snapshot: &Snapshot) -> Result<usize> {
        let (Some(first), Some(last)) = (snapshot.first(), snapshot.last()) else {
            return Ok(0);
        };
        let log = self.log(snapshot.sensor)?;
        let mut log = log.lock().expect("sensor log poisoned");
        let doomed: Vec<Timestamp> = log
            .entries
            .range(first..=last)
            .filter(|(_, &(_, seq))| seq < snapshot.high_water)
            .map(|(&t, _)| t)
            .collect();
        for t in &doomed {
            log.entries.remove(t);
        }
        // Rewrite in sequence order so replay reproduces the same winners.
        let mut survivors: Vec<(u64, TimePoint)> = log
            .entries
            .iter()
            .map(|(&t, &(v, seq))| (seq, TimePoint::new(t, v)))
            .collect();
        survivors.sort_by_key(|(seq, _)| *seq);
        let payloads: Vec<Vec<u8>> = survivors.iter().map(|(_, p)| encode_point(p).to_vec()).collect();
        log.log.rewrite(&payloads)?;
        Ok(doomed.len())
    }

    /// Serializes movers of the same sensor.
    pub(crate) fn move_lock(&self, sensor: SensorId) -> Arc<Mutex<()>> {
        self.move_locks
            .lock()
            .expect("move lock map poisoned")
            .entry(sensor)
            .or_default()
            .clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: SensorId = SensorId(1);

    fn staging() -> (tempfile::TempDir, StagingStore) {
        let dir = tempfile::tempdir().unwrap();
        let st = StagingStore::open_with(dir.path(), false).unwrap();
        st.register(S);
        (dir, st)
    }

    #[test]
    fn stage_counts_and_rejects_unknown() {
        let (_d, st) = staging();
        st.stage(S, TimePoint::new(100, 2.5)).unwrap();
        assert_eq!(st.len(S), 1);
        assert!(matches!(
            st.stage(SensorId(2), TimePoint::new(100, 1.0)),
            Err(Error::UnregisteredSensor(SensorId(2)))
        ));
        assert!(st.stage(S, TimePoint::new(101, f64::NAN)).is_err());
    }

    #[test]
    fn last_writer_wins() {
        let (_d, st) = staging();
        st.stage(S, TimePoint::new(100, 1.0)).unwrap();
        st.stage(S, TimePoint::new(100, 2.0)).unwrap();
        assert_eq!(st.points(S), vec![TimePoint::new(100, 2.0)]);
    }

    #[test]
    fn survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        {
            let st = StagingStore::open(dir.path()).unwrap();
            st.register(S);
            for t in [5, 3, 4, 3] {
                st.stage(S, TimePoint::new(t, t as f64 * 10.0 + 1.0)).unwrap();
            }
            st.stage(S, TimePoint::new(3, -1.0)).unwrap();
        }
        let st = StagingStore::open(dir.path()).unwrap();
        assert!(st.is_registered(S));
        assert_eq!(
            st.points(S),
            vec![
                TimePoint::new(3, -1.0),
                TimePoint::new(4, 41.0),
                TimePoint::new(5, 51.0)
            ]
        );
    }

    #[test]
    fn delete_spares_points_staged_after_snapshot() {
        let (dir, st) = staging();
        for t in 0..10 {
            st.stage(S, TimePoint::new(t, 0.0)).unwrap();
        }
        let snap = st.snapshot(S).unwrap();
        st.stage(S, TimePoint::new(10, 1.0)).unwrap();
        st.stage(S, TimePoint::new(5, 7.0)).unwrap(); // late overwrite inside the range
        assert_eq!(st.delete_snapshot(&snap).unwrap(), 9);
        let expected = vec![TimePoint::new(5, 7.0), TimePoint::new(10, 1.0)];
        assert_eq!(st.points(S), expected);
        drop(st);
        let reopened = StagingStore::open(dir.path()).unwrap();
        assert_eq!(reopened.points(S), expected);
    }
}
