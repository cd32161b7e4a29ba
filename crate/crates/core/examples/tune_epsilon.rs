//! Choose an epsilon for a PAR-like sensor from ten days of synthetic history.

use solvault::series::SensorId;
use solvault::synth::{generate, SynthSpec};
use solvault::tuner::{tune, EpsilonReport, TuneOptions};

fn main() -> solvault::error::Result<()> {
    let spec = SynthSpec {
        days: 10,
        seed: 7,
        ..SynthSpec::default()
    };
    let history = generate(&spec, SensorId(1))?;
    let outcome = tune(&history, &TuneOptions::default())?;

    println!("{}", EpsilonReport::CSV_HEADER.join(","));
    for r in &outcome.reports {
        println!("{}", r.csv_record().join(","));
    }
    println!("high-fluctuation day: {}", outcome.day);
    println!("noise floor: {:.3}", outcome.noise_floor);
    println!("selected: {} ({})", outcome.selection.epsilon, outcome.selection.reason);
    Ok(())
}
