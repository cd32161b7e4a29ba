use std::collections::BTreeMap;

use proptest::prelude::*;
use solvault::series::{day_of, SensorId, TimePoint, TimeSeries};
use solvault::store::{QuerySpec, Store};

const T0: i64 = 1_622_505_600;
const DAY: i64 = 86_400;
const SPAN: i64 = 4 * DAY;

fn open(dir: &std::path::Path) -> Store {
    Store::open_with(dir, false).unwrap()
}

/// Distinct timestamps across four days with arbitrary finite values.
fn points() -> impl Strategy<Value = Vec<TimePoint>> {
    proptest::collection::btree_map(0..SPAN, -1e6f64..1e6, 1..300)
        .prop_map(|m| m.into_iter().map(|(t, v)| TimePoint::new(T0 + t, v)).collect())
}

fn series(sensor: SensorId, pts: &[TimePoint]) -> TimeSeries {
    TimeSeries::new(sensor, pts.to_vec()).unwrap()
}

fn bits(s: &TimeSeries) -> Vec<(i64, u64)> {
    s.points().iter().map(|p| (p.timestamp, p.value.to_bits())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// A query over two adjacent ranges returns exactly the concatenation of
    /// the two sub-queries.
    #[test]
    fn adjacent_queries_concatenate(pts in points(), cut in 0..SPAN, seal in any::<[bool; 4]>()) {
        let dir = tempfile::tempdir().unwrap();
        let store = open(dir.path());
        let s = SensorId(3);
        store.register_sensor(s).unwrap();
        store.append(s, &series(s, &pts)).unwrap();
        for (i, &flag) in seal.iter().enumerate() {
            if flag {
                let _ = store.seal_day(s, day_of(T0 + i as i64 * DAY));
            }
        }
        let whole = store.query(&QuerySpec::raw(s, T0, T0 + SPAN)).unwrap();
        let left = store.query(&QuerySpec::raw(s, T0, T0 + cut)).unwrap();
        let right = store.query(&QuerySpec::raw(s, T0 + cut + 1, T0 + SPAN)).unwrap();
        let mut joined = bits(&left);
        joined.extend(bits(&right));
        prop_assert_eq!(bits(&whole), joined);
        prop_assert_eq!(bits(&whole), bits(&series(s, &pts)));
    }

    /// Sealing any subset of days and reopening never changes what a query
    /// returns.
    #[test]
    fn sealing_and_reopening_are_transparent(
        pts in points(),
        seal in any::<[bool; 4]>(),
        a in 0..SPAN,
        b in 0..SPAN,
    ) {
        let (start, end) = (T0 + a.min(b), T0 + a.max(b));
        let dir = tempfile::tempdir().unwrap();
        let s = SensorId(9);
        let before;
        {
            let store = open(dir.path());
            store.register_sensor(s).unwrap();
            store.append(s, &series(s, &pts)).unwrap();
            before = bits(&store.query(&QuerySpec::raw(s, start, end)).unwrap());
            for (i, &flag) in seal.iter().enumerate() {
                if flag {
                    let _ = store.seal_day(s, day_of(T0 + i as i64 * DAY));
                }
            }
            prop_assert_eq!(&bits(&store.query(&QuerySpec::raw(s, start, end)).unwrap()), &before);
        }
        let store = open(dir.path());
        prop_assert_eq!(bits(&store.query(&QuerySpec::raw(s, start, end)).unwrap()), before);
        prop_assert_eq!(store.point_count(s).unwrap(), pts.len());
    }

    /// Appends split into arbitrary batches store the same as one append,
    /// and replaying every batch adds nothing.
    #[test]
    fn batched_appends_match_one_append(pts in points(), splits in proptest::collection::vec(0usize..300, 0..5)) {
        let s = SensorId(1);
        let one = tempfile::tempdir().unwrap();
        let many = tempfile::tempdir().unwrap();
        let a = open(one.path());
        let b = open(many.path());
        a.register_sensor(s).unwrap();
        b.register_sensor(s).unwrap();
        a.append(s, &series(s, &pts)).unwrap();

        let mut cuts: Vec<usize> = splits.into_iter().map(|c| c % (pts.len() + 1)).collect();
        cuts.push(0);
        cuts.push(pts.len());
        cuts.sort();
        let batches: Vec<&[TimePoint]> = cuts.windows(2).map(|w| &pts[w[0]..w[1]]).collect();
        for batch in batches.iter().rev() {
            b.append(s, &series(s, batch)).unwrap();
        }
        for batch in &batches {
            prop_assert_eq!(b.append(s, &series(s, batch)).unwrap(), 0);
        }
        let q = QuerySpec::raw(s, T0, T0 + SPAN);
        prop_assert_eq!(bits(&a.query(&q).unwrap()), bits(&b.query(&q).unwrap()));
    }

    /// Materialized queries interpolate between stored points and hit them
    /// exactly on the grid.
    #[test]
    fn materialized_grid_passes_through_stored_points(
        pts in proptest::collection::btree_map(0i64..600, -100f64..100.0, 2..40),
    ) {
        let s = SensorId(2);
        let dir = tempfile::tempdir().unwrap();
        let store = open(dir.path());
        store.register_sensor(s).unwrap();
        let pts: Vec<TimePoint> = pts.into_iter().map(|(t, v)| TimePoint::new(T0 + t, v)).collect();
        store.append(s, &series(s, &pts)).unwrap();
        let (first, last) = (pts[0].timestamp, pts[pts.len() - 1].timestamp);
        let grid = store.query(&QuerySpec::materialized(s, first, last, 1)).unwrap();
        prop_assert_eq!(grid.len() as i64, last - first + 1);
        let stored: BTreeMap<i64, f64> = pts.iter().map(|p| (p.timestamp, p.value)).collect();
        for p in grid.points() {
            if let Some(&v) = stored.get(&p.timestamp) {
                prop_assert!((p.value - v).abs() < 1e-9);
            } else {
                let (_, lo) = stored.range(..p.timestamp).next_back().unwrap();
                let (_, hi) = stored.range(p.timestamp..).next().unwrap();
                prop_assert!(p.value >= lo.min(*hi) - 1e-9 && p.value <= lo.max(*hi) + 1e-9);
            }
        }
    }
}
