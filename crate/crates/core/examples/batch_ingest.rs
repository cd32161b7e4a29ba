//! Generate a synthetic day as CSV, ingest it and compare before/after.

use solvault::cli::day_report;
use solvault::ingest::{ingest_file, MoverConfig, SensorMap};
use solvault::series::{now, SensorId};
use solvault::store::Store;
use solvault::synth::{generate, write_csv_file, SynthSpec};

fn main() -> solvault::error::Result<()> {
    let dir = tempfile::tempdir()?;
    let spec = SynthSpec::default();
    let sensor = SensorId(1);
    let original = generate(&spec, sensor)?;
    let csv = dir.path().join("par.csv");
    write_csv_file(&original, "1", &csv)?;

    let store = Store::open(dir.path().join("store"))?;
    store.register_sensor(sensor)?;
    let out = ingest_file(&csv, &SensorMap::new(), &MoverConfig::default(), &store, now())?;
    let r = &out.reports[0];
    println!(
        "rows {} -> kept {} at epsilon {}",
        r.resampled_count, r.kept_count, r.epsilon
    );

    let report = day_report(&store, sensor, spec.start, Some(&original))?;
    let (mae, rmse, max) = report.errors.expect("source given");
    println!(
        "reduction {:.2}%  mae {mae:.3}  rmse {rmse:.3}  max {max:.3}",
        100.0 * report.reduction
    );
    Ok(())
}
