//! A producer stages 1 Hz samples while the daemon moves them every 200 ms.

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use solvault::ingest::{spawn_daemon, MoverConfig, StagingStore};
use solvault::series::{now, SensorId, TimePoint};
use solvault::store::{QuerySpec, Store};

fn main() -> solvault::error::Result<()> {
    let dir = tempfile::tempdir()?;
    let store = Arc::new(Store::open(dir.path().join("store"))?);
    let staging = Arc::new(StagingStore::open(dir.path().join("staging"))?);
    let sensors = vec![SensorId(1), SensorId(2)];
    for &s in &sensors {
        staging.register(s);
    }
    let config = MoverConfig {
        period: Duration::from_millis(200),
        ..MoverConfig::default()
    };
    let daemon = spawn_daemon(config, sensors.clone(), store.clone(), staging.clone());

    // Replay ten minutes of samples, compressed in time.
    let t0 = now() - 3600;
    for t in 0..600 {
        for &s in &sensors {
            let v = 100.0 * s.0 as f64 + (t as f64 / 40.0).sin() * 30.0;
            staging.stage(s, TimePoint::new(t0 + t, v))?;
        }
        if t % 100 == 99 {
            thread::sleep(Duration::from_millis(150));
        }
    }
    thread::sleep(Duration::from_millis(500));

    let mut ticks = 0;
    while let Ok(tick) = daemon.reports.try_recv() {
        ticks += 1;
        for m in tick.moves.iter().filter(|m| m.appended_count > 0) {
            println!(
                "tick {ticks}: sensor {} staged {} kept {}",
                m.sensor, m.staged_count, m.kept_count
            );
        }
    }
    daemon.shutdown()?;

    for &s in &sensors {
        let stored = store.query(&QuerySpec::raw(s, t0, t0 + 599))?;
        println!(
            "sensor {s}: 600 samples stored as {} points, {} still staged",
            stored.len(),
            staging.len(s)
        );
    }
    Ok(())
}
