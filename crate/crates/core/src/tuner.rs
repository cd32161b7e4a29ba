//! Epsilon selection for a sensor.
//!
//! The procedure has four steps:
//!
//! 1. pick the day with the largest average of per-window standard
//!    deviations ([`find_high_fluctuation_day`]), the hardest day to compress;
//! 2. measure the sensor's noise floor during a steady-state clock window
//!    such as the night for an irradiance sensor ([`estimate_noise_floor`]);
//! 3. compress that day with every candidate epsilon and measure the point
//!    reduction and reconstruction error ([`sweep_epsilon`]);
//! 4. take the smallest candidate at or above the noise floor past which
//!    the extra savings flatten out ([`select_epsilon`]).

use std::collections::BTreeMap;
use std::fmt;

use chrono::{NaiveDate, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rdp::{reconstruct, simplify, DistanceMetric, Epsilon};
use crate::series::{day_of, day_start, TimeSeries, Timestamp, SECONDS_PER_DAY};

pub const DEFAULT_KNEE_THRESHOLD: f64 = 0.01;

/// Length of the windows whose standard deviations are averaged per day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FluctuationWindow {
    seconds: i64,
}

impl FluctuationWindow {
    pub fn new(seconds: i64) -> Result<Self> {
        if seconds <= 0 || SECONDS_PER_DAY % seconds != 0 {
            return Err(Error::InvalidArgument(format!(
                "window of {seconds} s must be positive and divide a day"
            )));
        }
        Ok(Self { seconds })
    }

    pub fn seconds(&self) -> i64 {
        self.seconds
    }
}

impl Default for FluctuationWindow {
    fn default() -> Self {
        Self { seconds: 2 * 3600 }
    }
}

/// Daily clock interval during which the sensor should read a constant.
///
/// `start > end` wraps midnight. Clock times are local to the site, which
/// sits `utc_offset_secs` east of UTC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateSpec {
    pub start: NaiveTime,
    pub end: NaiveTime,
    pub expected_value: f64,
    #[serde(default)]
    pub utc_offset_secs: i32,
}

impl Default for SteadyStateSpec {
    fn default() -> Self {
        Self {
            start: NaiveTime::from_hms_opt(0, 0, 0).expect("valid time"),
            end: NaiveTime::from_hms_opt(3, 0, 0).expect("valid time"),
            expected_value: 0.0,
            utc_offset_secs: 0,
        }
    }
}

impl SteadyStateSpec {
    pub fn validate(&self) -> Result<()> {
        if self.start == self.end {
            return Err(Error::InvalidArgument("steady-state window is empty".into()));
        }
        Ok(())
    }

    pub fn contains(&self, ts: Timestamp) -> bool {
        let local = (ts + self.utc_offset_secs as i64).rem_euclid(SECONDS_PER_DAY) as u32;
        let start = self.start.num_seconds_from_midnight();
        let end = self.end.num_seconds_from_midnight();
        if start < end {
            (start..end).contains(&local)
        } else {
            local >= start || local < end
        }
    }
}

/// Compression outcome for one candidate epsilon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonReport {
    pub epsilon: Epsilon,
    pub total_points: usize,
    pub kept_points: usize,
    pub reduction: f64,
    pub mae: f64,
    pub rmse: f64,
    pub max_error: f64,
}

impl EpsilonReport {
    pub const CSV_HEADER: [&'static str; 6] = ["epsilon", "kept_points", "reduction", "mae", "rmse", "max_error"];

    pub fn csv_record(&self) -> [String; 6] {
        [
            self.epsilon.to_string(),
            self.kept_points.to_string(),
            self.reduction.to_string(),
            self.mae.to_string(),
            self.rmse.to_string(),
            self.max_error.to_string(),
        ]
    }
}

/// Compares `original` with the piecewise-linear curve through `simplified`
/// at every original timestamp.
pub fn compression_metrics(original: &TimeSeries, simplified: &TimeSeries, epsilon: Epsilon) -> Result<EpsilonReport> {
    if original.is_empty() {
        return Err(Error::EmptyInput);
    }
    let at: Vec<Timestamp> = original.timestamps().collect();
    let rebuilt = reconstruct(simplified, &at)?;
    let n = original.len() as f64;
    let (mut abs_sum, mut sq_sum, mut max) = (0.0f64, 0.0f64, 0.0f64);
    for (o, r) in original.points().iter().zip(rebuilt.points()) {
        let e = (o.value - r.value).abs();
        abs_sum += e;
        sq_sum += e * e;
        max = max.max(e);
    }
    Ok(EpsilonReport {
        epsilon,
        total_points: original.len(),
        kept_points: simplified.len(),
        reduction: 1.0 - simplified.len() as f64 / n,
        mae: abs_sum / n,
        rmse: (sq_sum / n).sqrt(),
        max_error: max,
    })
}

fn population_std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn median_step(history: &TimeSeries) -> i64 {
    let mut steps: Vec<i64> = history
        .points()
        .windows(2)
        .map(|w| w[1].timestamp - w[0].timestamp)
        .collect();
    if steps.is_empty() {
        return 1;
    }
    steps.sort_unstable();
    steps[steps.len() / 2]
}

/// Average per-window standard deviation for every fully covered UTC day.
///
/// Windows with less than half their expected samples are skipped; a day
/// with no usable window is left out.
pub fn daily_fluctuation(history: &TimeSeries, window: FluctuationWindow) -> BTreeMap<NaiveDate, f64> {
    let mut out = BTreeMap::new();
    let (Some(first), Some(last)) = (history.first(), history.last()) else {
        return out;
    };
    let step = median_step(history);
    let expected = (window.seconds() / step).max(1) as usize;

    let mut by_window: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for p in history.points() {
        by_window
            .entry(p.timestamp.div_euclid(window.seconds()))
            .or_default()
            .push(p.value);
    }

    let mut day = day_of(first.timestamp);
    let last_day = day_of(last.timestamp);
    while day <= last_day {
        let start = day_start(day);
        let end = start + SECONDS_PER_DAY - 1;
        if first.timestamp <= start && last.timestamp >= end {
            let windows_per_day = SECONDS_PER_DAY / window.seconds();
            let first_window = start.div_euclid(window.seconds());
            let stds: Vec<f64> = (first_window..first_window + windows_per_day)
                .filter_map(|w| by_window.get(&w))
                .filter(|vals| vals.len() * 2 >= expected)
                .map(|vals| population_std_dev(vals))
                .collect();
            if !stds.is_empty() {
                out.insert(day, stds.iter().sum::<f64>() / stds.len() as f64);
            }
        }
        day = match day.succ_opt() {
            Some(d) => d,
            None => break,
        };
    }
    out
}

/// Day with the largest average per-window standard deviation; earliest
/// date wins ties.
pub fn find_high_fluctuation_day(history: &TimeSeries, window: FluctuationWindow) -> Result<NaiveDate> {
    let mut best: Option<(NaiveDate, f64)> = None;
    for (day, score) in daily_fluctuation(history, window) {
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((day, score));
        }
    }
    best.map(|(d, _)| d)
        .ok_or_else(|| Error::InsufficientData("history holds no complete day".into()))
}

/// Quantile with linear interpolation between closest ranks over sorted
/// input.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
}

/// Noise statistics of the steady-state samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseProfile {
    pub samples: usize,
    /// 99th minus 1st percentile of the steady-state readings.
    pub spread: f64,
    /// Median reading minus the expected steady-state value.
    pub bias: f64,
}

pub fn noise_profile(history: &TimeSeries, spec: &SteadyStateSpec) -> Result<NoiseProfile> {
    spec.validate()?;
    let mut values: Vec<f64> = history
        .points()
        .iter()
        .filter(|p| spec.contains(p.timestamp))
        .map(|p| p.value)
        .collect();
    if values.is_empty() {
        return Err(Error::InsufficientData(
            "no samples inside the steady-state window".into(),
        ));
    }
    values.sort_by(f64::total_cmp);
    Ok(NoiseProfile {
        samples: values.len(),
        spread: quantile(&values, 0.99) - quantile(&values, 0.01),
        bias: quantile(&values, 0.5) - spec.expected_value,
    })
}

/// Spread of the readings during steady state, the smallest useful epsilon.
pub fn estimate_noise_floor(history: &TimeSeries, spec: &SteadyStateSpec) -> Result<Epsilon> {
    Epsilon::new(noise_profile(history, spec)?.spread)
}

/// Compresses `day` with every candidate and measures the outcome.
pub fn sweep_epsilon(day: &TimeSeries, candidates: &[Epsilon], metric: DistanceMetric) -> Result<Vec<EpsilonReport>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate epsilons".into()));
    }
    if candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "candidate epsilons must be strictly increasing".into(),
        ));
    }
    if day.points().windows(2).any(|w| w[1].timestamp - w[0].timestamp != 1) {
        return Err(Error::InvalidArgument(
            "sweep input must lie on a uniform 1 s grid".into(),
        ));
    }
    candidates
        .iter()
        .map(|&eps| {
            let kept = simplify(day, eps, metric)?;
            compression_metrics(day, &kept, eps)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionReason {
    /// At or above the noise floor, and the next candidate saves less than
    /// the knee threshold.
    Knee,
    /// No knee found; smallest candidate at or above the noise floor.
    NoKnee,
    /// Every candidate is below the noise floor; the largest is returned.
    BelowNoiseFloor,
}

impl SelectionReason {
    pub fn is_warning(self) -> bool {
        self == SelectionReason::BelowNoiseFloor
    }
}

impl fmt::Display for SelectionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionReason::Knee => "savings flatten beyond this candidate",
            SelectionReason::NoKnee => "no savings knee; smallest candidate above the noise floor",
            SelectionReason::BelowNoiseFloor => "WARNING: every candidate is below the noise floor",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub epsilon: Epsilon,
    pub reason: SelectionReason,
}

/// Picks the operating epsilon from sweep results in ascending order.
pub fn select_epsilon(reports: &[EpsilonReport], noise_floor: Epsilon, knee_threshold: f64) -> Result<Selection> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no sweep reports".into()));
    }
    if !(knee_threshold.is_finite() && knee_threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid knee threshold {knee_threshold}"
        )));
    }
    let knee = reports
        .windows(2)
        .find(|w| w[0].epsilon >= noise_floor && w[1].reduction - w[0].reduction < knee_threshold);
    if let Some(w) = knee {
        return Ok(Selection {
            epsilon: w[0].epsilon,
            reason: SelectionReason::Knee,
        });
    }
    if let Some(r) = reports.iter().find(|r| r.epsilon >= noise_floor) {
        return Ok(Selection {
            epsilon: r.epsilon,
            reason: SelectionReason::NoKnee,
        });
    }
    let largest = reports.last().expect("non-empty").epsilon;
    log::warn!("all candidate epsilons are below the noise floor {noise_floor}; using {largest}");
    Ok(Selection {
        epsilon: largest,
        reason: SelectionReason::BelowNoiseFloor,
    })
}

#[derive(Debug, Clone)]
pub struct TuneOptions {
    pub window: FluctuationWindow,
    pub steady_state: SteadyStateSpec,
    pub candidates: Vec<Epsilon>,
    pub metric: DistanceMetric,
    pub knee_threshold: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            window: FluctuationWindow::default(),
            steady_state: SteadyStateSpec::default(),
            candidates: [1.0, 5.0, 10.0, 25.0]
                .into_iter()
                .map(|e| Epsilon::new(e).expect("valid"))
                .collect(),
            metric: DistanceMetric::Vertical,
            knee_threshold: DEFAULT_KNEE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub day: NaiveDate,
    pub noise_floor: Epsilon,
    pub reports: Vec<EpsilonReport>,
    pub selection: Selection,
}

/// Runs the full selection procedure on a 1 Hz history.
pub fn tune(history: &TimeSeries, options: &TuneOptions) -> Result<TuneOutcome> {
    let day = find_high_fluctuation_day(history, options.window)?;
    let noise_floor = estimate_noise_floor(history, &options.steady_state)?;
    let start = day_start(day);
    let day_series = history.slice(start, start + SECONDS_PER_DAY - 1);
    let reports = sweep_epsilon(&day_series, &options.candidates, options.metric)?;
    let selection = select_epsilon(&reports, noise_floor, options.knee_threshold)?;
    Ok(TuneOutcome {
        day,
        noise_floor,
        reports,
        selection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{SensorId, TimePoint};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const S: SensorId = SensorId(3);
    const T0: Timestamp = 1_622_505_600; // 2021-06-01T00:00:00Z

    fn eps(v: f64) -> Epsilon {
        Epsilon::new(v).unwrap()
    }

    fn days_of(mut gen: impl FnMut(usize, i64) -> f64, days: usize) -> TimeSeries {
        let points = (0..days as i64 * SECONDS_PER_DAY)
            .map(|s| TimePoint::new(T0 + s, gen((s / SECONDS_PER_DAY) as usize, s % SECONDS_PER_DAY)))
            .collect();
        TimeSeries::new(S, points).unwrap()
    }

    fn report(e: f64, reduction: f64) -> EpsilonReport {
        EpsilonReport {
            epsilon: eps(e),
            total_points: 1000,
            kept_points: ((1.0 - reduction) * 1000.0) as usize,
            reduction,
            mae: 0.0,
            rmse: 0.0,
            max_error: 0.0,
        }
    }

    #[test]
    fn window_must_divide_day() {
        assert!(FluctuationWindow::new(7200).is_ok());
        assert!(FluctuationWindow::new(7000).is_err());
        assert!(FluctuationWindow::new(0).is_err());
    }

    #[test]
    fn square_wave_day_wins() {
        let h = days_of(|d, s| if d == 2 && (s / 60) % 2 == 0 { 10.0 } else { 3.0 }, 3);
        let day = find_high_fluctuation_day(&h, FluctuationWindow::default()).unwrap();
        assert_eq!(day, NaiveDate::from_ymd_opt(2021, 6, 3).unwrap());
    }

    #[test]
    fn identical_days_tie_to_earliest() {
        let h = days_of(|_, s| (s as f64 / 100.0).sin(), 3);
        let day = find_high_fluctuation_day(&h, FluctuationWindow::default()).unwrap();
        assert_eq!(day, NaiveDate::from_ymd_opt(2021, 6, 1).unwrap());
    }

    #[test]
    fn recovers_scheduled_variance() {
        // Ground truth recorded by the generator: day 6 has the widest noise.
        let widths: [f64; 10] = [1.0, 2.0, 0.5, 3.0, 1.5, 2.5, 4.0, 0.1, 3.5, 1.0];
        let truth = widths.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = days_of(|d, _| rng.gen::<f64>() * widths[d], widths.len());
        let day = find_high_fluctuation_day(&h, FluctuationWindow::default()).unwrap();
        assert_eq!(day, NaiveDate::from_ymd_opt(2021, 6, 1 + truth as u32).unwrap());
    }

    #[test]
    fn partial_days_are_insufficient() {
        let h = TimeSeries::new(S, (0..3600).map(|s| TimePoint::new(T0 + 100 + s, 1.0)).collect()).unwrap();
        assert!(matches!(
            find_high_fluctuation_day(&h, FluctuationWindow::default()),
            Err(Error::InsufficientData(_))
        ));
        assert!(find_high_fluctuation_day(&TimeSeries::empty(S), FluctuationWindow::default()).is_err());
    }

    #[test]
    fn sparse_windows_are_skipped() {
        // One full day where only the first hour of each 2 h window has
        // samples (50% coverage, kept) and day 2 with 10% coverage windows.
        let mut pts = Vec::new();
        for s in 0..2 * SECONDS_PER_DAY {
            let in_day2 = s >= SECONDS_PER_DAY;
            let keep = if in_day2 { s % 7200 < 720 } else { s % 7200 < 3600 };
            if keep || s == 2 * SECONDS_PER_DAY - 1 {
                pts.push(TimePoint::new(
                    T0 + s,
                    if in_day2 { (s % 2) as f64 * 100.0 } else { 0.0 },
                ));
            }
        }
        let h = TimeSeries::new(S, pts).unwrap();
        let scores = daily_fluctuation(&h, FluctuationWindow::default());
        assert_eq!(scores.len(), 1);
        assert_eq!(
            scores.keys().next(),
            Some(&NaiveDate::from_ymd_opt(2021, 6, 1).unwrap())
        );
    }

    #[test]
    fn noise_floor_of_uniform_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = days_of(|_, _| 1.0 + 5.0 * rng.gen::<f64>(), 2);
        let floor = estimate_noise_floor(&h, &SteadyStateSpec::default()).unwrap();
        assert!((floor.value() - 5.0).abs() <= 0.2, "{floor}");
        // Analytic p99 - p1 of U[a, b] is 0.98 (b - a).
        let (a, b) = (-3.0, 9.0);
        let h = days_of(|_, _| a + (b - a) * rng.gen::<f64>(), 2);
        let floor = estimate_noise_floor(&h, &SteadyStateSpec::default()).unwrap();
        assert!((floor.value() - 0.98 * (b - a)).abs() < 0.05, "{floor}");
    }

    #[test]
    fn noise_floor_edge_cases() {
        let zero = days_of(|_, _| 0.0, 1);
        assert_eq!(
            estimate_noise_floor(&zero, &SteadyStateSpec::default()).unwrap(),
            Epsilon::ZERO
        );
        let daytime_only =
            TimeSeries::new(S, (0..100).map(|s| TimePoint::new(T0 + 43_200 + s, 1.0)).collect()).unwrap();
        assert!(matches!(
            estimate_noise_floor(&daytime_only, &SteadyStateSpec::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn steady_state_window_wraps_midnight() {
        let spec = SteadyStateSpec {
            start: NaiveTime::from_hms_opt(22, 0, 0).unwrap(),
            end: NaiveTime::from_hms_opt(2, 0, 0).unwrap(),
            expected_value: 0.0,
            utc_offset_secs: 0,
        };
        assert!(spec.contains(T0 + 23 * 3600));
        assert!(spec.contains(T0 + 3600));
        assert!(!spec.contains(T0 + 2 * 3600));
        let shifted = SteadyStateSpec {
            utc_offset_secs: 3600,
            ..SteadyStateSpec::default()
        };
        // 23:30 UTC is 00:30 at UTC+1.
        assert!(shifted.contains(T0 + 23 * 3600 + 1800));
        assert!(!shifted.contains(T0 + 2 * 3600 + 1800));
    }

    #[test]
    fn sweep_constant_and_zero_epsilon() {
        let constant = days_of(|_, _| 4.0, 1);
        let n = constant.len() as f64;
        let reports = sweep_epsilon(&constant, &[eps(1.0), eps(5.0)], DistanceMetric::Vertical).unwrap();
        for r in &reports {
            assert_eq!(r.kept_points, 2);
            assert_eq!(r.reduction, (n - 2.0) / n);
            assert_eq!((r.mae, r.rmse, r.max_error), (0.0, 0.0, 0.0));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noisy = TimeSeries::new(S, (0..2000).map(|s| TimePoint::new(s, rng.gen::<f64>())).collect()).unwrap();
        let r = &sweep_epsilon(&noisy, &[Epsilon::ZERO], DistanceMetric::Vertical).unwrap()[0];
        assert!(r.reduction < 0.01);
        assert_eq!(r.max_error, 0.0);
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let s = days_of(|_, _| 0.0, 1);
        assert!(matches!(
            sweep_epsilon(&s, &[], DistanceMetric::Vertical),
            Err(Error::InvalidArgument(_))
        ));
        assert!(sweep_epsilon(&s, &[eps(5.0), eps(1.0)], DistanceMetric::Vertical).is_err());
        let gappy = TimeSeries::from_pairs(S, &[(0, 0.0), (2, 0.0)]).unwrap();
        assert!(sweep_epsilon(&gappy, &[eps(1.0)], DistanceMetric::Vertical).is_err());
    }

    #[test]
    fn metrics_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut v = 0.0;
        let s = TimeSeries::new(
            S,
            (0..5000)
                .map(|t| {
                    v += rng.gen_range(-2.0..2.0);
                    TimePoint::new(t, v)
                })
                .collect(),
        )
        .unwrap();
        let reports = sweep_epsilon(
            &s,
            &[eps(1.0), eps(5.0), eps(10.0), eps(25.0)],
            DistanceMetric::Vertical,
        )
        .unwrap();
        for w in reports.windows(2) {
            assert!(w[1].reduction >= w[0].reduction);
        }
        for r in &reports {
            assert!(r.max_error <= r.epsilon.value());
            assert!(r.rmse >= r.mae && r.max_error >= r.mae);
            // Brute force: evaluate the kept polyline independently.
            let kept = simplify(&s, r.epsilon, DistanceMetric::Vertical).unwrap();
            let k = kept.points();
            let mut errs = Vec::new();
            for p in s.points() {
                let j = k.iter().position(|q| q.timestamp >= p.timestamp).unwrap();
                let approx = if k[j].timestamp == p.timestamp {
                    k[j].value
                } else {
                    let (a, b) = (k[j - 1], k[j]);
                    a.value
                        + (b.value - a.value) * (p.timestamp - a.timestamp) as f64 / (b.timestamp - a.timestamp) as f64
                };
                errs.push((p.value - approx).abs());
            }
            let mae = errs.iter().sum::<f64>() / errs.len() as f64;
            let max = errs.iter().cloned().fold(0.0, f64::max);
            assert!((mae - r.mae).abs() < 1e-9);
            assert!((max - r.max_error).abs() < 1e-9);
            assert_eq!(r.kept_points, kept.len());
        }
    }

    #[test]
    fn select_reproduces_worked_example() {
        let reports = [
            report(1.0, 0.80),
            report(5.0, 0.98),
            report(10.0, 0.985),
            report(25.0, 0.995),
        ];
        let sel = select_epsilon(&reports, eps(5.0), DEFAULT_KNEE_THRESHOLD).unwrap();
        assert_eq!(sel.epsilon, eps(5.0));
        assert_eq!(sel.reason, SelectionReason::Knee);
    }

    #[test]
    fn select_fallbacks() {
        let sel = select_epsilon(&[report(3.0, 0.5)], Epsilon::ZERO, 0.01).unwrap();
        assert_eq!((sel.epsilon, sel.reason), (eps(3.0), SelectionReason::NoKnee));

        let reports = [report(1.0, 0.5), report(5.0, 0.9)];
        let sel = select_epsilon(&reports, eps(50.0), 0.01).unwrap();
        assert_eq!(sel.epsilon, eps(5.0));
        assert!(sel.reason.is_warning());

        assert!(select_epsilon(&[], Epsilon::ZERO, 0.01).is_err());
    }

    #[test]
    fn select_stable_under_flat_extension() {
        let mut reports = vec![report(1.0, 0.80), report(5.0, 0.98), report(10.0, 0.985)];
        let before = select_epsilon(&reports, eps(2.0), 0.01).unwrap();
        reports.push(report(25.0, 0.99));
        reports.push(report(50.0, 0.992));
        assert_eq!(
            select_epsilon(&reports, eps(2.0), 0.01).unwrap().epsilon,
            before.epsilon
        );
    }
}
