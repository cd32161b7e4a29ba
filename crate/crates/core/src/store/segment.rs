//! Sealed day segment: one sensor, one UTC day, stored column by column.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      4 bytes  "SVLT"
//! version    u16      1
//! flags      u16      0 (reserved for column encodings)
//! sensor     u64
//! day        i64      Unix seconds of 00:00:00 UTC
//! count      u32      number of points
//! gap_count  u32
//! offsets    count x u32   seconds within the day, strictly increasing
//! values     count x f64   IEEE-754 binary64
//! gaps       gap_count x (i64 start, i64 end)
//! checksum   u32      CRC-32 (IEEE) of every preceding byte
//! ```

use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::series::{day_of, day_start, Gap, SensorId, TimePoint, SECONDS_PER_DAY};

pub const MAGIC: &[u8; 4] = b"SVLT";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 8 + 8 + 4 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub sensor: SensorId,
    pub day: NaiveDate,
    pub offsets: Vec<u32>,
    pub values: Vec<f64>,
    pub gaps: Vec<Gap>,
    pub checksum: u32,
}

impl Segment {
    /// Builds a segment from sorted points that all fall on `day`.
    pub fn build(sensor: SensorId, day: NaiveDate, points: &[TimePoint], gaps: Vec<Gap>) -> Result<Self> {
        let origin = day_start(day);
        let mut offsets = Vec::with_capacity(points.len());
        let mut values = Vec::with_capacity(points.len());
        for p in points {
            let off = p.timestamp - origin;
            if !(0..SECONDS_PER_DAY).contains(&off) {
                return Err(Error::InvalidArgument(format!(
                    "timestamp {} is not on {day}",
                    p.timestamp
                )));
            }
            if offsets.last().is_some_and(|&last| last >= off as u32) {
                return Err(Error::Ordering("segment offsets must be strictly increasing".into()));
            }
            offsets.push(off as u32);
            values.push(p.value);
        }
        let mut segment = Segment {
            sensor,
            day,
            offsets,
            values,
            gaps,
            checksum: 0,
        };
        let bytes = segment.encode_body();
        segment.checksum = crc32fast::hash(&bytes);
        Ok(segment)
    }

    pub fn count(&self) -> usize {
        self.offsets.len()
    }

    pub fn points(&self) -> impl Iterator<Item = TimePoint> + '_ {
        let origin = day_start(self.day);
        self.offsets
            .iter()
            .zip(&self.values)
            .map(move |(&o, &v)| TimePoint::new(origin + o as i64, v))
    }

    fn encode_body(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER_LEN + self.count() * 12 + self.gaps.len() * 16 + 4);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&0u16.to_le_bytes());
        buf.extend_from_slice(&self.sensor.0.to_le_bytes());
        buf.extend_from_slice(&day_start(self.day).to_le_bytes());
        buf.extend_from_slice(&(self.count() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.gaps.len() as u32).to_le_bytes());
        for o in &self.offsets {
            buf.extend_from_slice(&o.to_le_bytes());
        }
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for g in &self.gaps {
            buf.extend_from_slice(&g.start.to_le_bytes());
            buf.extend_from_slice(&g.end.to_le_bytes());
        }
        buf
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = self.encode_body();
        let crc = crc32fast::hash(&buf);
        buf.extend_from_slice(&crc.to_le_bytes());
        buf
    }

    /// Parses and verifies a segment. `path` is only used in error messages.
    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::corruption(path, reason);
        if bytes.len() < HEADER_LEN + 4 {
            return Err(bad("truncated header"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        let actual = crc32fast::hash(body);
        if stored != actual {
            return Err(bad(&format!(
                "checksum mismatch: stored {stored:#010x}, computed {actual:#010x}"
            )));
        }
        let mut r = Reader { buf: body, pos: 0 };
        if r.take(4) != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = r.u16();
        if version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported format version {version}")));
        }
        let _flags = r.u16();
        let sensor = SensorId(r.u64());
        let day_secs = r.i64();
        if day_secs.rem_euclid(SECONDS_PER_DAY) != 0 {
            return Err(bad("day is not aligned to midnight"));
        }
        let day = day_of(day_secs);
        let count = r.u32() as usize;
        let gap_count = r.u32() as usize;
        if body.len() != HEADER_LEN + count * 12 + gap_count * 16 {
            return Err(bad("length does not match header counts"));
        }
        let offsets: Vec<u32> = (0..count).map(|_| r.u32()).collect();
        let values: Vec<f64> = (0..count)
            .map(|_| f64::from_le_bytes(r.take(8).try_into().expect("8 bytes")))
            .collect();
        let gaps: Vec<Gap> = (0..gap_count).map(|_| Gap::new(r.i64(), r.i64())).collect();
        if offsets.windows(2).any(|w| w[0] >= w[1]) || offsets.last().is_some_and(|&o| o as i64 >= SECONDS_PER_DAY) {
            return Err(bad("offsets out of order or outside the day"));
        }
        Ok(Segment {
            sensor,
            day,
            offsets,
            values,
            gaps,
            checksum: stored,
        })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> &'a [u8] {
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        s
    }
    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take(2).try_into().expect("2 bytes"))
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take(4).try_into().expect("4 bytes"))
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take(8).try_into().expect("8 bytes"))
    }
    fn i64(&mut self) -> i64 {
        i64::from_le_bytes(self.take(8).try_into().expect("8 bytes"))
    }
}
