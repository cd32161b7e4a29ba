//! Ramer-Douglas-Peucker simplification of time series and the matching
//! linear-interpolation reconstruction.
//!
//! A point is kept when its distance to the chord of the segment it belongs
//! to exceeds epsilon; otherwise the whole interior of that segment is
//! dropped. The first and last points are always kept. Because every segment
//! is split at its farthest point (lowest index on ties), the split tree does
//! not depend on epsilon, which makes kept sets nested across epsilons.
//!
//! Traversal uses an explicit stack so a full day of 1 Hz data cannot
//! overflow the call stack on adversarial shapes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{lerp, TimePoint, TimeSeries, Timestamp};

/// How far a point lies from a chord.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    /// Deviation along the value axis only, in sensor units.
    #[default]
    Vertical,
    /// Euclidean point-to-segment distance after dividing the time axis by
    /// `time_scale` (seconds per value unit).
    Perpendicular { time_scale: f64 },
}

impl DistanceMetric {
    pub fn perpendicular(time_scale: f64) -> Result<Self> {
        let metric = DistanceMetric::Perpendicular { time_scale };
        metric.validate()?;
        Ok(metric)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DistanceMetric::Vertical => Ok(()),
            DistanceMetric::Perpendicular { time_scale } if time_scale > 0.0 && time_scale.is_finite() => Ok(()),
            DistanceMetric::Perpendicular { time_scale } => Err(Error::InvalidArgument(format!(
                "time_scale must be positive, got {time_scale}"
            ))),
        }
    }
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceMetric::Vertical => f.write_str("vertical"),
            DistanceMetric::Perpendicular { time_scale } => write!(f, "perpendicular:{time_scale}"),
        }
    }
}

impl std::str::FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "vertical" => Ok(DistanceMetric::Vertical),
            "perpendicular" => DistanceMetric::perpendicular(1.0),
            other => match other.strip_prefix("perpendicular:") {
                Some(scale) => DistanceMetric::perpendicular(
                    scale
                        .parse()
                        .map_err(|_| Error::Parse(format!("invalid time scale {scale:?}")))?,
                ),
                None => Err(Error::Parse(format!("unknown metric {other:?}"))),
            },
        }
    }
}

/// Simplification threshold in sensor units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Epsilon(f64);

impl Epsilon {
    pub const ZERO: Epsilon = Epsilon(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Epsilon(value))
        } else {
            Err(Error::InvalidArgument(format!(
                "epsilon must be finite and non-negative, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Epsilon {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Epsilon::new(value)
    }
}

impl From<Epsilon> for f64 {
    fn from(e: Epsilon) -> f64 {
        e.0
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Distance from `p` to the chord `a`-`b` under `metric`.
pub fn point_to_chord_distance(p: &TimePoint, a: &TimePoint, b: &TimePoint, metric: DistanceMetric) -> Result<f64> {
    if a.timestamp >= b.timestamp || p.timestamp < a.timestamp || p.timestamp > b.timestamp {
        return Err(Error::Ordering(format!(
            "need a < b and a <= p <= b, got a={} p={} b={}",
            a.timestamp, p.timestamp, b.timestamp
        )));
    }
    metric.validate()?;
    Ok(chord_distance(p, a, b, metric))
}

#[inline]
fn chord_distance(p: &TimePoint, a: &TimePoint, b: &TimePoint, metric: DistanceMetric) -> f64 {
    match metric {
        DistanceMetric::Vertical => (p.value - lerp(a, b, p.timestamp)).abs(),
        DistanceMetric::Perpendicular { time_scale } => {
            // Coordinates relative to `a` keep epoch-sized timestamps out of
            // the floating point arithmetic.
            let bx = (b.timestamp - a.timestamp) as f64 / time_scale;
            let by = b.value - a.value;
            let px = (p.timestamp - a.timestamp) as f64 / time_scale;
            let py = p.value - a.value;
            let len_sq = bx * bx + by * by;
            if len_sq == 0.0 {
                return px.hypot(py);
            }
            let t = ((px * bx + py * by) / len_sq).clamp(0.0, 1.0);
            (px - t * bx).hypot(py - t * by)
        }
    }
}

/// Indices of the points kept by simplification, ascending.
pub fn simplify_indices(points: &[TimePoint], epsilon: Epsilon, metric: DistanceMetric) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    metric.validate()?;
    let n = points.len();
    if n <= 2 {
        return Ok((0..n).collect());
    }
    let eps = epsilon.value();
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((first, last)) = stack.pop() {
        if last - first < 2 {
            continue;
        }
        let (a, b) = (&points[first], &points[last]);
        let mut max_dist = -1.0;
        let mut max_idx = first;
        for (i, p) in points.iter().enumerate().take(last).skip(first + 1) {
            let d = chord_distance(p, a, b, metric);
            if d > max_dist {
                max_dist = d;
                max_idx = i;
            }
        }
        if max_dist > eps {
            keep[max_idx] = true;
            stack.push((max_idx, last));
            stack.push((first, max_idx));
        }
    }
    Ok(keep.iter().enumerate().filter_map(|(i, &k)| k.then_some(i)).collect())
}

/// Simplified subsequence of `series`, always containing both endpoints.
pub fn simplify(series: &TimeSeries, epsilon: Epsilon, metric: DistanceMetric) -> Result<TimeSeries> {
    let points = series.points();
    let kept = simplify_indices(points, epsilon, metric)?;
    Ok(TimeSeries::from_trusted(
        series.sensor(),
        kept.into_iter().map(|i| points[i]).collect(),
    ))
}

/// Values of the piecewise-linear curve through `simplified` at each of the
/// requested timestamps. Kept timestamps return their stored value exactly;
/// requests outside `[first, last]` fail rather than extrapolate.
pub fn reconstruct(simplified: &TimeSeries, at: &[Timestamp]) -> Result<TimeSeries> {
    if let Some(w) = at.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Ordering(format!(
            "requested timestamps not strictly increasing: {} then {}",
            w[0], w[1]
        )));
    }
    let pts = simplified.points();
    let mut out = Vec::with_capacity(at.len());
    let mut seg = 0usize;
    for &t in at {
        let (first, last) = match (pts.first(), pts.last()) {
            (Some(f), Some(l)) => (f.timestamp, l.timestamp),
            _ => {
                return Err(Error::OutOfRange {
                    timestamp: t,
                    first: 0,
                    last: -1,
                })
            }
        };
        if t < first || t > last {
            return Err(Error::OutOfRange {
                timestamp: t,
                first,
                last,
            });
        }
        while seg + 1 < pts.len() && pts[seg + 1].timestamp < t {
            seg += 1;
        }
        let value = if pts[seg].timestamp == t || seg + 1 == pts.len() {
            pts[seg].value
        } else {
            lerp(&pts[seg], &pts[seg + 1], t)
        };
        out.push(TimePoint::new(t, value));
    }
    Ok(TimeSeries::from_trusted(simplified.sensor(), out))
}
