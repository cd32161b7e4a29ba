use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use chrono::NaiveDate;

use crate::error::Result;
use crate::series::{now, SensorId, Timestamp};
use crate::store::Store;

use super::mover::run_mover;
use super::staging::StagingStore;
use super::{MoveReport, MoverConfig};

/// Day D is sealed at the first tick at or after D+1 00:05 UTC.
pub const DEFAULT_SEAL_GRACE_SECS: i64 = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub started_at: Timestamp,
    pub moves: Vec<MoveReport>,
    /// Sensors whose move or seal failed this tick.
    pub errors: Vec<(SensorId, String)>,
    pub sealed: Vec<(SensorId, NaiveDate)>,
}

/// Runs the mover for every sensor once per `config.period` until a message
/// arrives on `shutdown` or its sender is dropped. Moves of different
/// sensors run on scoped worker threads; a tick that has started always
/// completes. A failing sensor is logged and retried next tick.
pub fn run_daemon(
    config: &MoverConfig,
    sensors: &[SensorId],
    store: &Store,
    staging: &StagingStore,
    shutdown: &Receiver<()>,
    mut on_tick: impl FnMut(TickReport),
) -> Result<()> {
    config.validate()?;
    for &s in sensors {
        store.register_sensor(s)?;
        staging.register(s);
    }
    log::info!("daemon started: {} sensors, period {:?}", sensors.len(), config.period);
    let mut deadline = Instant::now() + config.period;
    loop {
        let wait = deadline.saturating_duration_since(Instant::now());
        match shutdown.recv_timeout(wait) {
            Ok(()) | Err(RecvTimeoutError::Disconnected) => break,
            Err(RecvTimeoutError::Timeout) => {}
        }
        deadline += config.period;
        if deadline < Instant::now() {
            log::warn!("tick overran the mover period");
            deadline = Instant::now() + config.period;
        }
        on_tick(tick(config, sensors, store, staging));
    }
    log::info!("daemon stopped");
    Ok(())
}

fn tick(config: &MoverConfig, sensors: &[SensorId], store: &Store, staging: &StagingStore) -> TickReport {
    let started_at = now();
    let outcomes: Vec<(SensorId, Result<MoveReport>)> = thread::scope(|scope| {
        let workers: Vec<_> = sensors
            .iter()
            .map(|&s| (s, scope.spawn(move || run_mover(staging, s, config, store))))
            .collect();
        workers
            .into_iter()
            .map(|(s, w)| (s, w.join().expect("mover worker panicked")))
            .collect()
    });

    let mut report = TickReport {
        started_at,
        moves: Vec::new(),
        errors: Vec::new(),
        sealed: Vec::new(),
    };
    for (sensor, outcome) in outcomes {
        match outcome {
            Ok(m) => report.moves.push(m),
            Err(e) => {
                log::error!("move of sensor {sensor} failed: {e}");
                report.errors.push((sensor, e.to_string()));
            }
        }
    }

    let clock = now();
    for &sensor in sensors {
        let days = match store.sealable_days(sensor, clock, DEFAULT_SEAL_GRACE_SECS) {
            Ok(d) => d,
            Err(e) => {
                report.errors.push((sensor, e.to_string()));
                continue;
            }
        };
        for day in days {
            match store.seal_day_at(sensor, day, clock) {
                Ok(_) => {
                    log::info!("sealed sensor {sensor} day {day}");
                    report.sealed.push((sensor, day));
                }
                Err(e) => {
                    log::error!("seal of sensor {sensor} day {day} failed: {e}");
                    report.errors.push((sensor, e.to_string()));
                }
            }
        }
    }
    report
}

/// A daemon running on its own thread.
pub struct DaemonHandle {
    stop: Sender<()>,
    thread: thread::JoinHandle<Result<()>>,
    pub reports: Receiver<TickReport>,
}

impl DaemonHandle {
    /// Asks the daemon to stop after any tick in progress and waits for it.
    pub fn shutdown(self) -> Result<()> {
        let _ = self.stop.send(());
        self.join()
    }

    pub fn join(self) -> Result<()> {
        self.thread.join().expect("daemon thread panicked")
    }
}

pub fn spawn_daemon(
    config: MoverConfig,
    sensors: Vec<SensorId>,
    store: Arc<Store>,
    staging: Arc<StagingStore>,
) -> DaemonHandle {
    let (stop, stop_rx) = mpsc::channel();
    let (report_tx, reports) = mpsc::channel();
    let thread = thread::Builder::new()
        .name("solvault-daemon".into())
        .spawn(move || {
            run_daemon(&config, &sensors, &store, &staging, &stop_rx, |r| {
                let _ = report_tx.send(r);
            })
        })
        .expect("spawn daemon thread");
    DaemonHandle { stop, thread, reports }
}
