//! Simplify a noisy ramp with both distance metrics and check the error bound.

use solvault::rdp::{reconstruct, simplify, DistanceMetric, Epsilon};
use solvault::series::{SensorId, TimePoint, TimeSeries};
use solvault::tuner::compression_metrics;

fn main() -> solvault::error::Result<()> {
    let sensor = SensorId(1);
    let points: Vec<TimePoint> = (0..3600)
        .map(|t| {
            let wobble = ((t * 7919) % 13) as f64 / 13.0 - 0.5;
            TimePoint::new(t, 0.05 * t as f64 + 20.0 * (t as f64 / 600.0).sin() + wobble)
        })
        .collect();
    let series = TimeSeries::new(sensor, points)?;

    println!("metric,epsilon,kept,reduction,max_error");
    for metric in [DistanceMetric::Vertical, DistanceMetric::perpendicular(60.0)?] {
        for eps in [0.5, 1.0, 5.0] {
            let eps = Epsilon::new(eps)?;
            let kept = simplify(&series, eps, metric)?;
            let m = compression_metrics(&series, &kept, eps)?;
            println!("{metric},{eps},{},{:.4},{:.4}", m.kept_points, m.reduction, m.max_error);
        }
    }

    // Any instant inside the kept range can be read back by interpolation.
    let kept = simplify(&series, Epsilon::new(1.0)?, DistanceMetric::Vertical)?;
    let back = reconstruct(&kept, &[0, 1800, 3599])?;
    for p in back.points() {
        println!("t={} value={:.3}", p.timestamp, p.value);
    }
    Ok(())
}
