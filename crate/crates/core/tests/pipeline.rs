use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use solvault::ingest::{run_daemon, run_mover, spawn_daemon, MoverConfig, StagingStore};
use solvault::rdp::reconstruct;
use solvault::series::{now, SensorId, TimePoint};
use solvault::store::{QuerySpec, Store};

struct Rig {
    _dir: tempfile::TempDir,
    staging: Arc<StagingStore>,
    store: Arc<Store>,
}

fn rig(sensors: &[SensorId]) -> Rig {
    let dir = tempfile::tempdir().unwrap();
    let staging = Arc::new(StagingStore::open_with(dir.path().join("staging"), false).unwrap());
    let store = Arc::new(Store::open_with(dir.path().join("store"), false).unwrap());
    for &s in sensors {
        staging.register(s);
        store.register_sensor(s).unwrap();
    }
    Rig {
        _dir: dir,
        staging,
        store,
    }
}

const S: SensorId = SensorId(11);
const T0: i64 = 1_622_505_600;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Any batch split and arrival order: the stored curve stays within
    /// epsilon of the 1 Hz signal and holds each timestamp once.
    #[test]
    fn batches_in_any_order_conserve_the_signal(
        cuts in proptest::collection::btree_set(1i64..899, 0..6),
        seed in any::<u64>(),
        eps in prop_oneof![Just(0.5), Just(2.0), Just(5.0)],
    ) {
        let r = rig(&[S]);
        let value = |t: i64| {
            let x = (t as u64).wrapping_mul(seed | 1) % 1000;
            (t as f64 / 50.0).sin() * 40.0 + x as f64 / 100.0
        };
        let config = MoverConfig {
            default_epsilon: solvault::rdp::Epsilon::new(eps).unwrap(),
            ..MoverConfig::default()
        };
        let mut bounds: Vec<i64> = vec![0];
        bounds.extend(cuts.iter().copied());
        bounds.push(900);
        for w in bounds.windows(2) {
            // Stage each batch back to front.
            for t in (w[0]..w[1]).rev() {
                r.staging.stage(S, TimePoint::new(T0 + t, value(t))).unwrap();
            }
            run_mover(&r.staging, S, &config, &r.store).unwrap();
        }
        // A trailing single point waits in staging for a partner.
        prop_assert!(r.staging.len(S) <= 1);
        if r.staging.len(S) == 1 {
            r.staging.stage(S, TimePoint::new(T0 + 900, value(900))).unwrap();
            run_mover(&r.staging, S, &config, &r.store).unwrap();
        }
        prop_assert!(r.staging.is_empty(S));

        let stored = r.store.query(&QuerySpec::raw(S, T0, T0 + 900)).unwrap();
        prop_assert!(stored.points().windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        let last = stored.last().unwrap().timestamp;
        let at: Vec<i64> = (T0..=last).collect();
        let rebuilt = reconstruct(&stored, &at).unwrap();
        for p in rebuilt.points() {
            let err = (p.value - value(p.timestamp - T0)).abs();
            prop_assert!(err <= eps, "t={} err={err}", p.timestamp - T0);
        }
    }
}

#[test]
fn concurrent_producers_lose_nothing() {
    let r = rig(&[S]);
    let config = MoverConfig::default();
    let done = Arc::new(AtomicBool::new(false));
    let producer = {
        let staging = r.staging.clone();
        let done = done.clone();
        thread::spawn(move || {
            for t in 0..3000 {
                staging.stage(S, TimePoint::new(T0 + t, (t % 50) as f64)).unwrap();
            }
            done.store(true, Ordering::SeqCst);
        })
    };
    while !done.load(Ordering::SeqCst) {
        run_mover(&r.staging, S, &config, &r.store).unwrap();
    }
    producer.join().unwrap();
    while r.staging.len(S) >= 2 {
        run_mover(&r.staging, S, &config, &r.store).unwrap();
    }
    let stored = r.store.query(&QuerySpec::raw(S, T0, T0 + 3000)).unwrap();
    let last = stored.last().unwrap().timestamp;
    let covered_to = r.staging.points(S).last().map_or(last, |p| p.timestamp.max(last));
    assert_eq!(covered_to, T0 + 2999);
    let rebuilt = reconstruct(&stored, &(T0..=last).collect::<Vec<_>>()).unwrap();
    for p in rebuilt.points() {
        assert!((p.value - ((p.timestamp - T0) % 50) as f64).abs() <= 5.0);
    }
}

/// Stage latency is measured while the daemon compresses large batches of
/// two sensors in the background.
#[test]
fn staging_stays_writable_while_the_daemon_compresses() {
    let sensors = [SensorId(1), SensorId(2)];
    let r = rig(&sensors);
    let start = now() - 3 * 86_400;
    // A large backlog so every tick has real compression work.
    for t in 0..40_000 {
        for &s in &sensors {
            let v = (t as f64 / 300.0).sin() * 500.0 + ((t * 31) % 17) as f64;
            r.staging.stage(s, TimePoint::new(start + t, v)).unwrap();
        }
    }
    let config = MoverConfig {
        period: Duration::from_millis(30),
        ..MoverConfig::default()
    };
    let daemon = spawn_daemon(config, sensors.to_vec(), r.store.clone(), r.staging.clone());

    let mut worst = Duration::ZERO;
    let mut staged = 0;
    let deadline = Instant::now() + Duration::from_millis(1500);
    let mut t = 40_000;
    let mut moves = 0;
    while Instant::now() < deadline {
        for &s in &sensors {
            let begin = Instant::now();
            r.staging.stage(s, TimePoint::new(start + t, 1.0)).unwrap();
            worst = worst.max(begin.elapsed());
            staged += 1;
        }
        t += 1;
        while let Ok(tick) = daemon.reports.try_recv() {
            assert!(
                tick.errors.is_empty(),
                "{:?} {:?} {:?}",
                tick.errors,
                tick.moves,
                tick.sealed
            );
            moves += tick.moves.len();
        }
    }
    daemon.shutdown().unwrap();
    assert!(moves >= 2, "daemon produced {moves} move reports");
    assert!(staged > 100);
    assert!(worst < Duration::from_millis(250), "worst stage() latency {worst:?}");
}

#[test]
fn one_tick_two_sensors_two_reports() {
    let sensors = [SensorId(1), SensorId(2)];
    let r = rig(&sensors);
    let t0 = now() - 1000;
    for t in 0..300 {
        for &s in &sensors {
            r.staging.stage(s, TimePoint::new(t0 + t, s.0 as f64 * 7.0)).unwrap();
        }
    }
    let (tx, rx) = mpsc::channel();
    let mut reports = Vec::new();
    let config = MoverConfig {
        period: Duration::from_millis(10),
        ..MoverConfig::default()
    };
    run_daemon(&config, &sensors, &r.store, &r.staging, &rx, |tick| {
        reports.push(tick);
        tx.send(()).unwrap();
    })
    .unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].moves.len(), 2);
    for m in &reports[0].moves {
        assert_eq!((m.staged_count, m.kept_count), (300, 2));
    }
}

#[test]
fn shutdown_mid_tick_never_half_deletes() {
    for round in 0..5 {
        let sensors = [SensorId(1), SensorId(2), SensorId(3)];
        let r = rig(&sensors);
        let t0 = now() - 5 * 86_400;
        let n = 30_000;
        for t in 0..n {
            for &s in &sensors {
                r.staging
                    .stage(s, TimePoint::new(t0 + t, ((t * s.0 as i64) % 97) as f64))
                    .unwrap();
            }
        }
        let config = MoverConfig {
            period: Duration::from_millis(5),
            ..MoverConfig::default()
        };
        let daemon = spawn_daemon(config, sensors.to_vec(), r.store.clone(), r.staging.clone());
        thread::sleep(Duration::from_millis(3 + round * 4));
        daemon.shutdown().unwrap();
        for &s in &sensors {
            let left = r.staging.len(s);
            let stored = r.store.point_count(s).unwrap();
            match left {
                0 => assert!(stored > 0),
                l if l == n as usize => assert_eq!(stored, 0),
                l => panic!("sensor {s}: {l} of {n} staged points left"),
            }
        }
    }
}
