//! Append compressed points, seal the day, reopen and query.

use solvault::series::{SensorId, TimeSeries};
use solvault::store::{QuerySpec, Store};

fn main() -> solvault::error::Result<()> {
    let dir = tempfile::tempdir()?;
    let sensor = SensorId(3);
    let t0 = 1_622_505_600; // 2021-06-01
    let day = solvault::series::day_of(t0);

    let before = {
        let store = Store::open(dir.path())?;
        store.register_sensor(sensor)?;
        let pts = TimeSeries::from_pairs(sensor, &[(t0, 1.0), (t0 + 3600, 400.0), (t0 + 7200, 380.5)])?;
        println!("appended {}", store.append(sensor, &pts)?);
        println!("replayed {}", store.append(sensor, &pts)?);
        let q = store.query(&QuerySpec::raw(sensor, t0, t0 + 86_399))?;
        let seg = store.seal_day(sensor, day)?;
        println!(
            "sealed {} with {} points, checksum {:08x}",
            seg.day,
            seg.count(),
            seg.checksum
        );
        q
    };

    let store = Store::open(dir.path())?;
    let after = store.query(&QuerySpec::raw(sensor, t0, t0 + 86_399))?;
    assert_eq!(before, after);
    println!("sealed days after reopen: {:?}", store.sealed_days(sensor)?);

    let grid = store.query(&QuerySpec::materialized(sensor, t0, t0 + 7200, 1800))?;
    for p in grid.points() {
        println!("{} {:.2}", p.timestamp - t0, p.value);
    }
    Ok(())
}
