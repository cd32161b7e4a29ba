//! Day-partitioned columnar store for compressed points.
//!
//! Directory layout:
//!
//! ```text
//! <root>/<sensor_id>/open.wal          open (unsealed) day buckets
//! <root>/<sensor_id>/<YYYY-MM-DD>.seg  sealed day segments
//! ```
//!
//! Appends land in the sensor's write-ahead log and an in-memory bucket per
//! UTC day. Sealing a day freezes its bucket into a [`Segment`] file and
//! compacts the log. Segment checksums are verified on every read.

mod segment;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use chrono::NaiveDate;

pub use segment::{Segment, FORMAT_VERSION, MAGIC};

use crate::error::{Error, Result};
use crate::framed::{write_atomic, FramedLog};
use crate::series::{day_of, day_start, lerp, Gap, SensorId, TimePoint, TimeSeries, Timestamp, SECONDS_PER_DAY};

const WAL_FILE: &str = "open.wal";
const SEGMENT_EXT: &str = "seg";

/// Range query; with `resolution` set the result is materialized on a
/// uniform grid by linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuerySpec {
    pub sensor: SensorId,
    pub start: Timestamp,
    pub end: Timestamp,
    pub resolution: Option<u32>,
}

impl QuerySpec {
    pub fn raw(sensor: SensorId, start: Timestamp, end: Timestamp) -> Self {
        Self {
            sensor,
            start,
            end,
            resolution: None,
        }
    }

    pub fn materialized(sensor: SensorId, start: Timestamp, end: Timestamp, resolution: u32) -> Self {
        Self {
            sensor,
            start,
            end,
            resolution: Some(resolution),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.start > self.end {
            return Err(Error::InvalidArgument(format!(
                "query start {} is after end {}",
                self.start, self.end
            )));
        }
        if self.resolution == Some(0) {
            return Err(Error::InvalidArgument("resolution must be at least 1 s".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Default, Clone)]
struct Bucket {
    points: BTreeMap<Timestamp, f64>,
    gaps: BTreeSet<Gap>,
}

struct Partition {
    dir: PathBuf,
    wal: FramedLog,
    open: BTreeMap<NaiveDate, Bucket>,
    sealed: BTreeSet<NaiveDate>,
}

impl Partition {
    fn open(dir: PathBuf, sensor: SensorId, sync: bool) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        let mut sealed = BTreeSet::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some(SEGMENT_EXT) {
                continue;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            match NaiveDate::parse_from_str(stem, "%Y-%m-%d") {
                Ok(day) => {
                    sealed.insert(day);
                }
                Err(_) => log::warn!("ignoring unexpected file {}", path.display()),
            }
        }

        let (wal, frames) = FramedLog::open(&dir.join(WAL_FILE), sync)?;
        let mut open: BTreeMap<NaiveDate, Bucket> = BTreeMap::new();
        for frame in frames {
            let (points, gaps) = decode_batch(&frame)
                .ok_or_else(|| Error::corruption(dir.join(WAL_FILE), format!("malformed batch for sensor {sensor}")))?;
            for p in points {
                let day = day_of(p.timestamp);
                if !sealed.contains(&day) {
                    open.entry(day).or_default().points.insert(p.timestamp, p.value);
                }
            }
            for g in gaps {
                let day = day_of(g.start);
                if !sealed.contains(&day) {
                    open.entry(day).or_default().gaps.insert(g);
                }
            }
        }
        Ok(Self { dir, wal, open, sealed })
    }

    fn segment_path(&self, day: NaiveDate) -> PathBuf {
        self.dir.join(format!("{}.{SEGMENT_EXT}", day.format("%Y-%m-%d")))
    }

    fn read_segment(&self, day: NaiveDate) -> Result<Segment> {
        let path = self.segment_path(day);
        let bytes = fs::read(&path)?;
        Segment::decode(&bytes, &path)
    }

    /// Days holding data within `[lo, hi]`, ascending.
    fn days_in(&self, lo: NaiveDate, hi: NaiveDate) -> Vec<NaiveDate> {
        let mut days: BTreeSet<NaiveDate> = self.sealed.range(lo..=hi).copied().collect();
        days.extend(self.open.range(lo..=hi).map(|(d, _)| *d));
        days.into_iter().collect()
    }

    fn day_contents(&self, day: NaiveDate) -> Result<(Vec<TimePoint>, Vec<Gap>)> {
        if self.sealed.contains(&day) {
            let seg = self.read_segment(day)?;
            Ok((seg.points().collect(), seg.gaps))
        } else if let Some(b) = self.open.get(&day) {
            Ok((
                b.points.iter().map(|(&t, &v)| TimePoint::new(t, v)).collect(),
                b.gaps.iter().copied().collect(),
            ))
        } else {
            Ok((Vec::new(), Vec::new()))
        }
    }

    fn all_days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        let mut days: BTreeSet<NaiveDate> = self.sealed.clone();
        days.extend(self.open.keys().copied());
        days.into_iter()
    }

    /// Last stored point strictly before `t`.
    fn point_before(&self, t: Timestamp) -> Result<Option<TimePoint>> {
        let days: Vec<NaiveDate> = self.all_days().filter(|d| *d <= day_of(t)).collect();
        for day in days.into_iter().rev() {
            let (points, _) = self.day_contents(day)?;
            if let Some(p) = points.iter().rev().find(|p| p.timestamp < t) {
                return Ok(Some(*p));
            }
        }
        Ok(None)
    }

    /// First stored point strictly after `t`.
    fn point_after(&self, t: Timestamp) -> Result<Option<TimePoint>> {
        let days: Vec<NaiveDate> = self.all_days().filter(|d| *d >= day_of(t)).collect();
        for day in days {
            let (points, _) = self.day_contents(day)?;
            if let Some(p) = points.iter().find(|p| p.timestamp > t) {
                return Ok(Some(*p));
            }
        }
        Ok(None)
    }

    fn raw_range(&self, start: Timestamp, end: Timestamp) -> Result<(Vec<TimePoint>, Vec<Gap>)> {
        let mut points = Vec::new();
        let mut gaps = Vec::new();
        for day in self.days_in(day_of(start), day_of(end)) {
            let (p, g) = self.day_contents(day)?;
            points.extend(p.into_iter().filter(|p| (start..=end).contains(&p.timestamp)));
            gaps.extend(g);
        }
        Ok((points, gaps))
    }
}

fn encode_batch(points: &[TimePoint], gaps: &[Gap]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(8 + points.len() * 16 + gaps.len() * 16);
    buf.extend_from_slice(&(points.len() as u32).to_le_bytes());
    for p in points {
        buf.extend_from_slice(&p.timestamp.to_le_bytes());
        buf.extend_from_slice(&p.value.to_le_bytes());
    }
    buf.extend_from_slice(&(gaps.len() as u32).to_le_bytes());
    for g in gaps {
        buf.extend_from_slice(&g.start.to_le_bytes());
        buf.extend_from_slice(&g.end.to_le_bytes());
    }
    buf
}

fn decode_batch(buf: &[u8]) -> Option<(Vec<TimePoint>, Vec<Gap>)> {
    let word = |pos: usize| -> Option<[u8; 8]> { buf.get(pos..pos + 8)?.try_into().ok() };
    let n = u32::from_le_bytes(buf.get(0..4)?.try_into().ok()?) as usize;
    let mut pos = 4;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(TimePoint::new(
            i64::from_le_bytes(word(pos)?),
            f64::from_le_bytes(word(pos + 8)?),
        ));
        pos += 16;
    }
    let g = u32::from_le_bytes(buf.get(pos..pos + 4)?.try_into().ok()?) as usize;
    pos += 4;
    let mut gaps = Vec::with_capacity(g);
    for _ in 0..g {
        gaps.push(Gap::new(
            i64::from_le_bytes(word(pos)?),
            i64::from_le_bytes(word(pos + 8)?),
        ));
        pos += 16;
    }
    (pos == buf.len()).then_some((points, gaps))
}

/// Handle to a store directory. Cheap to share behind an `Arc`; one writer
/// per sensor, any number of readers.
pub struct Store {
    root: PathBuf,
    sync: bool,
    partitions: RwLock<BTreeMap<SensorId, Arc<RwLock<Partition>>>>,
    fail_appends: AtomicBool,
}

impl Store {
    /// Opens or creates the store at `root`, recovering every sensor's open
    /// buckets from its log.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(root, true)
    }

    /// `sync = false` skips fsync on appends; for tests and bulk loads.
    pub fn open_with(root: impl AsRef<Path>, sync: bool) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        let mut partitions = BTreeMap::new();
        for entry in fs::read_dir(&root)? {
            let entry = entry?;
            if !entry.file_type()?.is_dir() {
                continue;
            }
            let Some(id) = entry.file_name().to_str().and_then(|n| n.parse::<SensorId>().ok()) else {
                continue;
            };
            let partition = Partition::open(entry.path(), id, sync)?;
            partitions.insert(id, Arc::new(RwLock::new(partition)));
        }
        Ok(Self {
            root,
            sync,
            partitions: RwLock::new(partitions),
            fail_appends: AtomicBool::new(false),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Makes `sensor` known to the store. Idempotent.
    pub fn register_sensor(&self, sensor: SensorId) -> Result<()> {
        let mut parts = self.partitions.write().expect("store lock poisoned");
        if let std::collections::btree_map::Entry::Vacant(slot) = parts.entry(sensor) {
            let partition = Partition::open(self.root.join(sensor.to_string()), sensor, self.sync)?;
            slot.insert(Arc::new(RwLock::new(partition)));
        }
        Ok(())
    }

    pub fn sensors(&self) -> Vec<SensorId> {
        self.partitions
            .read()
            .expect("store lock poisoned")
            .keys()
            .copied()
            .collect()
    }

    fn partition(&self, sensor: SensorId) -> Result<Arc<RwLock<Partition>>> {
        self.partitions
            .read()
            .expect("store lock poisoned")
            .get(&sensor)
            .cloned()
            .ok_or(Error::UnknownSensor(sensor))
    }

    /// Makes the next appends fail before touching disk.
    #[doc(hidden)]
    pub fn inject_append_failure(&self, fail: bool) {
        self.fail_appends.store(fail, Ordering::SeqCst);
    }

    /// Appends sorted points. Returns how many were new; points already
    /// stored with the same value are skipped.
    pub fn append(&self, sensor: SensorId, points: &TimeSeries) -> Result<usize> {
        self.append_with_gaps(sensor, points, &[])
    }

    /// Appends points and recorded gaps as one atomic log record.
    pub fn append_with_gaps(&self, sensor: SensorId, points: &TimeSeries, gaps: &[Gap]) -> Result<usize> {
        let partition = self.partition(sensor)?;
        let mut part = partition.write().expect("partition lock poisoned");

        let mut sealed_cache: BTreeMap<NaiveDate, (BTreeMap<Timestamp, u64>, BTreeSet<Gap>)> = BTreeMap::new();
        let mut sealed_lookup =
            |part: &Partition, day: NaiveDate| -> Result<(BTreeMap<Timestamp, u64>, BTreeSet<Gap>)> {
                if let Some(c) = sealed_cache.get(&day) {
                    return Ok(c.clone());
                }
                let seg = part.read_segment(day)?;
                let entry = (
                    seg.points().map(|p| (p.timestamp, p.value.to_bits())).collect(),
                    seg.gaps.iter().copied().collect(),
                );
                sealed_cache.insert(day, entry.clone());
                Ok(entry)
            };

        let mut new_points = Vec::new();
        for p in points.points() {
            let day = day_of(p.timestamp);
            let existing = if part.sealed.contains(&day) {
                match sealed_lookup(&part, day)?.0.get(&p.timestamp) {
                    Some(&bits) => Some(f64::from_bits(bits)),
                    None => return Err(Error::SealedSegment { sensor, day }),
                }
            } else {
                part.open.get(&day).and_then(|b| b.points.get(&p.timestamp).copied())
            };
            match existing {
                Some(v) if v.to_bits() == p.value.to_bits() => {}
                Some(v) => {
                    return Err(Error::Conflict {
                        sensor,
                        timestamp: p.timestamp,
                        existing: v,
                        incoming: p.value,
                    })
                }
                None => new_points.push(*p),
            }
        }
        let mut new_gaps = Vec::new();
        for g in gaps {
            let day = day_of(g.start);
            let known = if part.sealed.contains(&day) {
                if !sealed_lookup(&part, day)?.1.contains(g) {
                    return Err(Error::SealedSegment { sensor, day });
                }
                true
            } else {
                part.open.get(&day).is_some_and(|b| b.gaps.contains(g))
            };
            if !known && !new_gaps.contains(g) {
                new_gaps.push(*g);
            }
        }
        if new_points.is_empty() && new_gaps.is_empty() {
            return Ok(0);
        }
        if self.fail_appends.load(Ordering::SeqCst) {
            return Err(Error::InjectedFault("store append"));
        }

        part.wal.append(&encode_batch(&new_points, &new_gaps))?;
        for p in &new_points {
            part.open
                .entry(day_of(p.timestamp))
                .or_default()
                .points
                .insert(p.timestamp, p.value);
        }
        for g in &new_gaps {
            part.open.entry(day_of(g.start)).or_default().gaps.insert(*g);
        }
        Ok(new_points.len())
    }

    /// Seals `day` if it ended before the current wall-clock time.
    pub fn seal_day(&self, sensor: SensorId, day: NaiveDate) -> Result<Segment> {
        self.seal_day_at(sensor, day, crate::series::now())
    }

    /// Freezes the open bucket of `day` into a segment file, treating `now`
    /// as the current time. Sealing an already sealed day returns the
    /// existing segment.
    pub fn seal_day_at(&self, sensor: SensorId, day: NaiveDate, now: Timestamp) -> Result<Segment> {
        let partition = self.partition(sensor)?;
        let mut part = partition.write().expect("partition lock poisoned");
        if part.sealed.contains(&day) {
            return part.read_segment(day);
        }
        if day_start(day) + SECONDS_PER_DAY > now {
            return Err(Error::NotYetSealable { day });
        }
        let bucket = match part.open.get(&day) {
            Some(b) if !b.points.is_empty() => b.clone(),
            _ => return Err(Error::NothingToSeal { sensor, day }),
        };
        let points: Vec<TimePoint> = bucket.points.iter().map(|(&t, &v)| TimePoint::new(t, v)).collect();
        let segment = Segment::build(sensor, day, &points, bucket.gaps.iter().copied().collect())?;
        write_atomic(&part.segment_path(day), &segment.encode())?;
        part.sealed.insert(day);
        part.open.remove(&day);

        let remaining: Vec<Vec<u8>> = part
            .open
            .values()
            .map(|b| {
                let pts: Vec<TimePoint> = b.points.iter().map(|(&t, &v)| TimePoint::new(t, v)).collect();
                let gaps: Vec<Gap> = b.gaps.iter().copied().collect();
                encode_batch(&pts, &gaps)
            })
            .collect();
        part.wal.rewrite(&remaining)?;
        Ok(segment)
    }

    /// Open days that ended at least `grace` seconds before `now`.
    pub fn sealable_days(&self, sensor: SensorId, now: Timestamp, grace: i64) -> Result<Vec<NaiveDate>> {
        let partition = self.partition(sensor)?;
        let part = partition.read().expect("partition lock poisoned");
        Ok(part
            .open
            .iter()
            .filter(|(d, b)| !b.points.is_empty() && day_start(**d) + SECONDS_PER_DAY + grace <= now)
            .map(|(d, _)| *d)
            .collect())
    }

    pub fn sealed_days(&self, sensor: SensorId) -> Result<Vec<NaiveDate>> {
        let partition = self.partition(sensor)?;
        let part = partition.read().expect("partition lock poisoned");
        Ok(part.sealed.iter().copied().collect())
    }

    pub fn is_sealed(&self, sensor: SensorId, day: NaiveDate) -> bool {
        self.partition(sensor)
            .map(|p| p.read().expect("partition lock poisoned").sealed.contains(&day))
            .unwrap_or(false)
    }

    /// Number of points in the open bucket of `day`.
    pub fn open_bucket_len(&self, sensor: SensorId, day: NaiveDate) -> Result<usize> {
        let partition = self.partition(sensor)?;
        let part = partition.read().expect("partition lock poisoned");
        Ok(part.open.get(&day).map_or(0, |b| b.points.len()))
    }

    pub fn query(&self, spec: &QuerySpec) -> Result<TimeSeries> {
        spec.validate()?;
        let partition = self.partition(spec.sensor)?;
        let part = partition.read().expect("partition lock poisoned");
        let (points, gaps) = part.raw_range(spec.start, spec.end)?;
        let Some(resolution) = spec.resolution else {
            return Ok(TimeSeries::from_trusted(spec.sensor, points));
        };

        // Neighbours outside the range anchor interpolation at its edges.
        let mut anchors = Vec::with_capacity(points.len() + 2);
        let before = match points.first() {
            Some(p) if p.timestamp == spec.start => None,
            _ => part.point_before(spec.start)?,
        };
        let after = match points.last() {
            Some(p) if p.timestamp == spec.end => None,
            _ => part.point_after(spec.end)?,
        };
        let mut gaps = gaps;
        if let Some(b) = before {
            let (_, g) = part.raw_range(b.timestamp, spec.start)?;
            gaps.extend(g);
            anchors.push(b);
        }
        anchors.extend(points);
        anchors.extend(after);

        let mut out = Vec::new();
        let mut seg = 0usize;
        let mut t = spec.start;
        while t <= spec.end && !anchors.is_empty() {
            while seg + 1 < anchors.len() && anchors[seg + 1].timestamp <= t {
                seg += 1;
            }
            let a = &anchors[seg];
            if a.timestamp == t {
                out.push(TimePoint::new(t, a.value));
            } else if a.timestamp < t && seg + 1 < anchors.len() && !gaps.iter().any(|g| g.covers(t)) {
                out.push(TimePoint::new(t, lerp(a, &anchors[seg + 1], t)));
            }
            t = match t.checked_add(resolution as i64) {
                Some(next) => next,
                None => break,
            };
        }
        Ok(TimeSeries::from_trusted(spec.sensor, out))
    }

    /// Recorded gaps whose start lies in a day overlapping `[start, end]`.
    pub fn gaps(&self, sensor: SensorId, start: Timestamp, end: Timestamp) -> Result<Vec<Gap>> {
        let partition = self.partition(sensor)?;
        let part = partition.read().expect("partition lock poisoned");
        let mut gaps = part.raw_range(start, end)?.1;
        gaps.retain(|g| g.end >= start && g.start <= end);
        gaps.sort();
        gaps.dedup();
        Ok(gaps)
    }

    /// Most recent stored point of `sensor`, if any.
    pub fn last_point(&self, sensor: SensorId) -> Result<Option<TimePoint>> {
        let Ok(partition) = self.partition(sensor) else {
            return Ok(None);
        };
        let part = partition.read().expect("partition lock poisoned");
        let last_day = part.all_days().last();
        match last_day {
            Some(day) => Ok(part.day_contents(day)?.0.last().copied()),
            None => Ok(None),
        }
    }

    /// Total stored point count of `sensor`.
    pub fn point_count(&self, sensor: SensorId) -> Result<usize> {
        let partition = self.partition(sensor)?;
        let part = partition.read().expect("partition lock poisoned");
        let days: Vec<NaiveDate> = part.all_days().collect();
        let mut n = 0;
        for day in days {
            n += part.day_contents(day)?.0.len();
        }
        Ok(n)
    }
}
