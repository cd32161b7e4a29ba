//! Segment scan throughput and disk use, raw versus compressed, for a week
//! of synthetic data. Run with `--release` for meaningful numbers.

use std::time::Instant;

use solvault::rdp::{simplify, DistanceMetric, Epsilon};
use solvault::series::{day_of, SensorId};
use solvault::store::{QuerySpec, Store};
use solvault::synth::{generate, SynthSpec};

fn dir_bytes(path: &std::path::Path) -> u64 {
    std::fs::read_dir(path)
        .unwrap()
        .map(|e| e.unwrap().metadata().unwrap().len())
        .sum()
}

fn main() -> solvault::error::Result<()> {
    let spec = SynthSpec {
        days: 7,
        ..SynthSpec::default()
    };
    let (raw, compressed) = (SensorId(1), SensorId(2));
    let history = generate(&spec, raw)?;
    let simplified = simplify(&history, Epsilon::new(5.0)?, DistanceMetric::Vertical)?;
    let (first, last) = (history.first().unwrap().timestamp, history.last().unwrap().timestamp);

    let dir = tempfile::tempdir()?;
    let store = Store::open_with(dir.path(), false)?;
    for (sensor, series) in [(raw, &history), (compressed, &simplified)] {
        store.register_sensor(sensor)?;
        store.append(sensor, series)?;
        let mut day = day_of(first);
        while day <= day_of(last) {
            store.seal_day(sensor, day)?;
            day = day.succ_opt().unwrap();
        }
    }

    println!("sensor,points,disk_bytes,raw_scan_ms,raw_points_per_s,grid_scan_ms");
    for sensor in [raw, compressed] {
        let rounds = 5;
        let begin = Instant::now();
        let mut n = 0;
        for _ in 0..rounds {
            n = store.query(&QuerySpec::raw(sensor, first, last))?.len();
        }
        let raw_ms = begin.elapsed().as_secs_f64() * 1000.0 / rounds as f64;
        let begin = Instant::now();
        for _ in 0..rounds {
            store.query(&QuerySpec::materialized(sensor, first, last, 60))?;
        }
        let grid_ms = begin.elapsed().as_secs_f64() * 1000.0 / rounds as f64;
        println!(
            "{sensor},{n},{},{raw_ms:.2},{:.0},{grid_ms:.2}",
            dir_bytes(&dir.path().join(sensor.to_string())),
            n as f64 / (raw_ms / 1000.0)
        );
    }
    Ok(())
}
