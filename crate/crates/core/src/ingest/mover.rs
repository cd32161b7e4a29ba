use crate::error::{Error, Result};
use crate::rdp::{simplify_indices, DistanceMetric, Epsilon};
use crate::series::{day_of, day_start, now, Gap, SensorId, TimePoint, TimeSeries, Timestamp};
use crate::store::Store;

use super::resample::{resample_1s, Resampled};
use super::staging::StagingStore;
use super::{MoveReport, MoverConfig};

/// Where [`run_mover_with_fault`] stops, simulating a crash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoverFault {
    /// After the store append succeeded, before staging is cleared.
    AfterAppend,
}

/// Simplifies every dense run independently; runs never share a chord.
pub(crate) fn compress_runs(resampled: &Resampled, epsilon: Epsilon, metric: DistanceMetric) -> Result<Vec<TimePoint>> {
    let mut kept = Vec::new();
    for run in resampled.runs() {
        kept.extend(simplify_indices(run, epsilon, metric)?.into_iter().map(|i| run[i]));
    }
    Ok(kept)
}

/// Start of the outage between `prev` and `first`, clipped forward to the
/// first unsealed day since sealed segments take no new gaps.
fn gap_start(store: &Store, sensor: SensorId, prev: Timestamp, first: Timestamp) -> Timestamp {
    let mut day = day_of(prev);
    while store.is_sealed(sensor, day) && day < day_of(first) {
        day = day.succ_opt().expect("date in range");
    }
    if day == day_of(prev) {
        prev
    } else {
        day_start(day)
    }
}

/// Moves everything currently staged for `sensor` into `store`.
///
/// The staged range is resampled to 1 Hz, compressed with the sensor's
/// epsilon and appended. When the store already holds an earlier point
/// within `max_gap` of the range, that point is prepended as an
/// interpolation anchor (and not appended again) so the compressed curve
/// stays continuous across consecutive moves. Staging is cleared only
/// after the append succeeded; a rerun after a crash in between is
/// harmless because staged points the store already covers are dropped.
pub fn run_mover(staging: &StagingStore, sensor: SensorId, config: &MoverConfig, store: &Store) -> Result<MoveReport> {
    run_mover_with_fault(staging, sensor, config, store, None)
}

#[doc(hidden)]
pub fn run_mover_with_fault(
    staging: &StagingStore,
    sensor: SensorId,
    config: &MoverConfig,
    store: &Store,
    fault: Option<MoverFault>,
) -> Result<MoveReport> {
    config.validate()?;
    let lock = staging.move_lock(sensor);
    let _guard = lock.lock().expect("move lock poisoned");
    let epsilon = config.epsilon_for(sensor);

    let Some(snapshot) = staging.snapshot(sensor) else {
        return Ok(MoveReport::skipped(sensor, 0, epsilon, now()));
    };
    let staged_count = snapshot.points.len();
    if staged_count < 2 {
        return Ok(MoveReport::skipped(sensor, staged_count, epsilon, now()));
    }
    let range = (
        snapshot.points[0].timestamp,
        snapshot.points[staged_count - 1].timestamp,
    );

    let previous = store.last_point(sensor)?;
    let fresh: Vec<TimePoint> = snapshot
        .points
        .iter()
        .copied()
        .filter(|p| previous.is_none_or(|prev| p.timestamp > prev.timestamp))
        .filter(|p| !store.is_sealed(sensor, day_of(p.timestamp)))
        .collect();
    let late_count = staged_count - fresh.len();

    let mut report = MoveReport {
        range: Some(range),
        staged_count,
        late_count,
        ..MoveReport::skipped(sensor, staged_count, epsilon, 0)
    };

    if !fresh.is_empty() {
        let first = fresh[0].timestamp;
        let mut boundary_gap = None;
        let anchor = match previous {
            Some(prev) => {
                // Interpolated points between the anchor and the range must
                // not land in an already sealed day.
                let bridged_sealed = (prev.timestamp + 1..first)
                    .map(day_of)
                    .any(|d| store.is_sealed(sensor, d));
                if first - prev.timestamp <= config.max_gap && !bridged_sealed {
                    Some(prev)
                } else {
                    boundary_gap = Some(Gap::new(gap_start(store, sensor, prev.timestamp, first), first));
                    None
                }
            }
            None => None,
        };

        let mut input = Vec::with_capacity(fresh.len() + 1);
        input.extend(anchor);
        input.extend(fresh.iter().copied());

        let (kept, mut gaps, resampled_count) = if input.len() == 1 {
            (input.clone(), Vec::new(), 1)
        } else {
            let resampled = resample_1s(sensor, &input, config.max_gap)?;
            let kept = compress_runs(&resampled, epsilon, config.metric)?;
            let after_anchor = |p: &TimePoint| anchor.is_none_or(|a| p.timestamp > a.timestamp);
            let resampled_count = resampled.series.points().iter().filter(|p| after_anchor(p)).count();
            let kept: Vec<TimePoint> = kept.into_iter().filter(after_anchor).collect();
            (kept, resampled.gaps, resampled_count)
        };
        gaps.extend(boundary_gap);

        report.resampled_count = resampled_count;
        report.kept_count = kept.len();
        report.gaps = gaps;
        let kept = TimeSeries::new(sensor, kept)?;
        report.appended_count = store.append_with_gaps(sensor, &kept, &report.gaps)?;
    }

    if fault == Some(MoverFault::AfterAppend) {
        return Err(Error::InjectedFault("mover stopped between append and delete"));
    }
    staging.delete_snapshot(&snapshot)?;
    report.executed_at = now();
    log::debug!(
        "moved sensor {sensor}: {} staged, {} kept, {} appended",
        report.staged_count,
        report.kept_count,
        report.appended_count
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdp::reconstruct;
    use crate::store::QuerySpec;

    const S: SensorId = SensorId(4);
    const T0: i64 = 1_622_505_600;

    struct Rig {
        _dir: tempfile::TempDir,
        staging: StagingStore,
        store: Store,
        config: MoverConfig,
    }

    fn rig() -> Rig {
        let dir = tempfile::tempdir().unwrap();
        let staging = StagingStore::open_with(dir.path().join("staging"), false).unwrap();
        let store = Store::open_with(dir.path().join("store"), false).unwrap();
        staging.register(S);
        store.register_sensor(S).unwrap();
        Rig {
            _dir: dir,
            staging,
            store,
            config: MoverConfig::default(),
        }
    }

    #[test]
    fn constant_batch_keeps_endpoints() {
        let r = rig();
        for t in 0..300 {
            r.staging.stage(S, TimePoint::new(T0 + t, 42.0)).unwrap();
        }
        assert_eq!(r.store.point_count(S).unwrap(), 0);
        let rep = run_mover(&r.staging, S, &r.config, &r.store).unwrap();
        assert_eq!(rep.kept_count, 2);
        assert_eq!(rep.appended_count, 2);
        assert_eq!(rep.resampled_count, 300);
        assert_eq!(rep.range, Some((T0, T0 + 299)));
        assert!(r.staging.is_empty(S));
    }

    #[test]
    fn fewer_than_two_points_skip() {
        let r = rig();
        let rep = run_mover(&r.staging, S, &r.config, &r.store).unwrap();
        assert_eq!((rep.staged_count, rep.range), (0, None));
        r.staging.stage(S, TimePoint::new(T0, 1.0)).unwrap();
        let rep = run_mover(&r.staging, S, &r.config, &r.store).unwrap();
        assert_eq!((rep.staged_count, rep.kept_count), (1, 0));
        assert_eq!(r.staging.len(S), 1);
    }

    #[test]
    fn ramp_across_batches_stays_within_epsilon() {
        let r = rig();
        let value = |t: i64| (t as f64 * 0.37).sin() * 20.0 + t as f64 * 0.05;
        for batch in 0..2 {
            for t in batch * 300..(batch + 1) * 300 {
                r.staging.stage(S, TimePoint::new(T0 + t, value(t))).unwrap();
            }
            run_mover(&r.staging, S, &r.config, &r.store).unwrap();
        }
        let stored = r.store.query(&QuerySpec::raw(S, T0, T0 + 600)).unwrap();
        let at: Vec<i64> = (0..600).map(|t| T0 + t).collect();
        let rebuilt = reconstruct(&stored, &at).unwrap();
        for p in rebuilt.points() {
            assert!((p.value - value(p.timestamp - T0)).abs() <= 5.0);
        }
    }

    #[test]
    fn failed_append_keeps_staging() {
        let r = rig();
        for t in 0..10 {
            r.staging.stage(S, TimePoint::new(T0 + t, t as f64)).unwrap();
        }
        r.store.inject_append_failure(true);
        assert!(run_mover(&r.staging, S, &r.config, &r.store).is_err());
        assert_eq!(r.staging.len(S), 10);
        r.store.inject_append_failure(false);
        run_mover(&r.staging, S, &r.config, &r.store).unwrap();
        assert!(r.staging.is_empty(S));
    }

    #[test]
    fn crash_between_append_and_delete_is_recoverable() {
        let r = rig();
        for t in 0..100 {
            r.staging
                .stage(S, TimePoint::new(T0 + t, (t % 17) as f64 * 3.0))
                .unwrap();
        }
        assert!(run_mover_with_fault(&r.staging, S, &r.config, &r.store, Some(MoverFault::AfterAppend)).is_err());
        let after_crash = r.store.query(&QuerySpec::raw(S, T0, T0 + 100)).unwrap();
        assert_eq!(r.staging.len(S), 100);
        let rep = run_mover(&r.staging, S, &r.config, &r.store).unwrap();
        assert_eq!(rep.appended_count, 0);
        assert_eq!(rep.late_count, 100);
        assert!(r.staging.is_empty(S));
        assert_eq!(r.store.query(&QuerySpec::raw(S, T0, T0 + 100)).unwrap(), after_crash);
    }

    #[test]
    fn outage_beyond_max_gap_is_recorded() {
        let r = rig();
        for t in 0..10 {
            r.staging.stage(S, TimePoint::new(T0 + t, 1.0)).unwrap();
        }
        run_mover(&r.staging, S, &r.config, &r.store).unwrap();
        for t in 3600..3610 {
            r.staging.stage(S, TimePoint::new(T0 + t, 9.0)).unwrap();
        }
        let rep = run_mover(&r.staging, S, &r.config, &r.store).unwrap();
        assert_eq!(rep.gaps, vec![Gap::new(T0 + 9, T0 + 3600)]);
        let mat = r.store.query(&QuerySpec::materialized(S, T0, T0 + 3609, 1)).unwrap();
        assert_eq!(mat.len(), 20);
    }

    #[test]
    fn points_staged_after_snapshot_survive() {
        let r = rig();
        for t in 0..50 {
            r.staging.stage(S, TimePoint::new(T0 + t, t as f64)).unwrap();
        }
        let snap = r.staging.snapshot(S).unwrap();
        r.staging.stage(S, TimePoint::new(T0 + 50, 50.0)).unwrap();
        r.staging.delete_snapshot(&snap).unwrap();
        assert_eq!(r.staging.points(S), vec![TimePoint::new(T0 + 50, 50.0)]);
    }

    #[test]
    fn resuming_after_a_sealed_day_clips_the_gap() {
        let r = rig();
        let midnight = T0 + 86_400;
        for t in midnight - 100..midnight - 90 {
            r.staging.stage(S, TimePoint::new(t, 1.0)).unwrap();
        }
        run_mover(&r.staging, S, &r.config, &r.store).unwrap();
        r.store.seal_day(S, day_of(T0)).unwrap();
        // Inside max_gap, but bridging would write into the sealed day.
        for t in midnight + 5..midnight + 15 {
            r.staging.stage(S, TimePoint::new(t, 2.0)).unwrap();
        }
        let rep = run_mover(&r.staging, S, &r.config, &r.store).unwrap();
        assert_eq!(rep.gaps, vec![Gap::new(midnight, midnight + 5)]);
        assert_eq!(rep.appended_count, 2);
        assert!(r.staging.is_empty(S));
    }
}
