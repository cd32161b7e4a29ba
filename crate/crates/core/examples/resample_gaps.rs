//! Irregular samples onto a 1 Hz grid; holes wider than `max_gap` stay empty.

use solvault::ingest::resample_1s;
use solvault::series::{format_timestamp, SensorId, TimePoint};

fn main() -> solvault::error::Result<()> {
    let t0 = 1_622_505_600;
    let raw = [
        TimePoint::new(t0, 10.0),
        TimePoint::new(t0 + 4, 14.0),
        TimePoint::new(t0 + 4, 18.0), // replaces the previous sample
        TimePoint::new(t0 + 6, 20.0),
        TimePoint::new(t0 + 900, 5.0), // after a 15 minute outage
        TimePoint::new(t0 + 902, 7.0),
    ];
    let r = resample_1s(SensorId(1), &raw, 600)?;
    println!("{} grid points, {} gap(s)", r.series.len(), r.gaps.len());
    for g in &r.gaps {
        println!("gap {} .. {}", format_timestamp(g.start), format_timestamp(g.end));
    }
    for run in r.runs() {
        let values: Vec<String> = run.iter().map(|p| p.value.to_string()).collect();
        println!("run from {}: {}", format_timestamp(run[0].timestamp), values.join(" "));
    }
    Ok(())
}
