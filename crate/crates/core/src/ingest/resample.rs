use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::series::{lerp, Gap, SensorId, TimePoint, TimeSeries};

/// Output of [`resample_1s`]: a 1 Hz series that may contain recorded gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub series: TimeSeries,
    pub gaps: Vec<Gap>,
}

impl Resampled {
    /// Dense 1 Hz runs separated by the recorded gaps.
    pub fn runs(&self) -> Vec<&[TimePoint]> {
        let pts = self.series.points();
        let mut runs = Vec::with_capacity(self.gaps.len() + 1);
        let mut begin = 0;
        for i in 1..pts.len() {
            if pts[i].timestamp - pts[i - 1].timestamp > 1 {
                runs.push(&pts[begin..i]);
                begin = i;
            }
        }
        if !pts.is_empty() {
            runs.push(&pts[begin..]);
        }
        runs
    }
}

/// Sorts raw samples, keeps the last value seen for each timestamp, and
/// fills a 1 s grid by linear interpolation. Spacings wider than `max_gap`
/// seconds are recorded as gaps instead of being filled.
pub fn resample_1s(sensor: SensorId, raw: &[TimePoint], max_gap: i64) -> Result<Resampled> {
    if max_gap < 1 {
        return Err(Error::InvalidArgument(format!(
            "max_gap must be at least 1 s, got {max_gap}"
        )));
    }
    let mut dedup: BTreeMap<i64, f64> = BTreeMap::new();
    for p in raw {
        if !p.value.is_finite() {
            return Err(Error::NonFinite {
                timestamp: p.timestamp,
                value: p.value,
            });
        }
        dedup.insert(p.timestamp, p.value);
    }
    if dedup.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "resampling needs at least 2 distinct samples, got {}",
            dedup.len()
        )));
    }
    let sorted: Vec<TimePoint> = dedup.into_iter().map(TimePoint::from).collect();
    let span = (sorted[sorted.len() - 1].timestamp - sorted[0].timestamp) as usize;
    let mut out = Vec::with_capacity((span + 1).min(sorted.len() * (max_gap as usize).min(4096)));
    let mut gaps = Vec::new();
    out.push(sorted[0]);
    for w in sorted.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.timestamp - a.timestamp > max_gap {
            gaps.push(Gap::new(a.timestamp, b.timestamp));
        } else {
            for t in a.timestamp + 1..b.timestamp {
                out.push(TimePoint::new(t, lerp(a, b, t)));
            }
        }
        out.push(*b);
    }
    Ok(Resampled {
        series: TimeSeries::from_trusted(sensor, out),
        gaps,
    })
}
