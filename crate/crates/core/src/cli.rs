//! Command-line front end. `src/main.rs` only calls [`main`].

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::Duration;

use chrono::{NaiveDate, NaiveTime};
use clap::{Args, Parser, Subcommand};

use crate::catalog::{Catalog, SensorFilter};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::ingest::{self, read_csv, resample_1s, MoveReport, SensorMap, StagingStore};
use crate::rdp::{reconstruct, Epsilon};
use crate::series::{
    day_start, format_timestamp, now, parse_timestamp, SensorId, TimeSeries, Timestamp, SECONDS_PER_DAY,
};
use crate::store::{QuerySpec, Store};
use crate::synth::{self, SynthSpec};
use crate::tuner::{self, EpsilonReport};

#[derive(Debug, Parser)]
#[command(name = "solvault", version, about = "Compressed 1 Hz sensor time-series store")]
pub struct Cli {
    /// Store root directory.
    #[arg(long, global = true, default_value = "solvault-store")]
    pub store: PathBuf,
    /// Catalog document; when given, sensor ids are checked against its registry.
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a whole CSV file into the store; prints one report per sensor.
    Ingest(IngestArgs),
    /// Run the periodic mover and day sealer until interrupted.
    Daemon(DaemonArgs),
    /// Pick an epsilon for a sensor from its history; prints the sweep.
    TuneEpsilon(TuneArgs),
    /// Print stored points of a sensor.
    Query(QueryArgs),
    /// Summarize compression of one sensor-day.
    Report(ReportArgs),
    /// Write a synthetic irradiance CSV.
    GenSynth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub file: PathBuf,
    /// COLUMN=SENSOR; repeatable. Default: numeric headers map to themselves.
    #[arg(long = "map", value_parser = parse_pair::<String, u64>)]
    pub map: Vec<(String, u64)>,
    /// SENSOR=EPSILON; repeatable. Overrides the config file.
    #[arg(long = "epsilon", value_parser = parse_pair::<u64, f64>)]
    pub epsilons: Vec<(u64, f64)>,
    /// Epsilon for sensors without an override.
    #[arg(long)]
    pub default_epsilon: Option<f64>,
    /// Timestamp recorded as the reports' execution time.
    #[arg(long, value_parser = parse_ts)]
    pub executed_at: Option<Timestamp>,
}

#[derive(Debug, Args)]
pub struct DaemonArgs {
    /// Stop after this many ticks.
    #[arg(long)]
    pub ticks: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Read history from this CSV instead of the store.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Value column of `--input`. Default: the first column after `timestamp`.
    #[arg(long)]
    pub column: Option<String>,
    /// Sensor to read from the store.
    #[arg(long)]
    pub sensor: Option<u64>,
    #[arg(long, value_parser = parse_ts)]
    pub from: Option<Timestamp>,
    #[arg(long, value_parser = parse_ts)]
    pub to: Option<Timestamp>,
    /// Comma-separated ascending candidate epsilons.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Option<Vec<f64>>,
    /// Steady-state window start, HH:MM[:SS].
    #[arg(long, value_parser = parse_time)]
    pub steady_start: Option<NaiveTime>,
    #[arg(long, value_parser = parse_time)]
    pub steady_end: Option<NaiveTime>,
    /// Value the sensor should read during the steady-state window.
    #[arg(long)]
    pub expected: Option<f64>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub sensor: u64,
    #[arg(long, value_parser = parse_ts)]
    pub from: Timestamp,
    #[arg(long, value_parser = parse_ts)]
    pub to: Timestamp,
    /// Materialize on a grid of this many seconds.
    #[arg(long)]
    pub resolution: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub sensor: u64,
    /// UTC day, YYYY-MM-DD.
    #[arg(long)]
    pub day: NaiveDate,
    /// Original samples, for error metrics.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Value column of `--source`. Default: the sensor id.
    #[arg(long)]
    pub column: Option<String>,
    /// Print per-second plot data instead of the summary.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output file, or `-` for standard output.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub days: u32,
    #[arg(long, default_value_t = 2000.0)]
    pub peak: f64,
    #[arg(long, default_value_t = 6.0)]
    pub cloud_rate: f64,
    #[arg(long, default_value_t = 5.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "2021-06-01")]
    pub start: NaiveDate,
    /// Name of the value column.
    #[arg(long, default_value = "1")]
    pub column: String,
}

fn parse_pair<K: std::str::FromStr, V: std::str::FromStr>(s: &str) -> std::result::Result<(K, V), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    let k = k.trim().parse().map_err(|_| format!("invalid key {k:?}"))?;
    let v = v.trim().parse().map_err(|_| format!("invalid value {v:?}"))?;
    Ok((k, v))
}

fn parse_ts(s: &str) -> std::result::Result<Timestamp, String> {
    parse_timestamp(s).map_err(|e| e.to_string())
}

fn parse_time(s: &str) -> std::result::Result<NaiveTime, String> {
    NaiveTime::parse_from_str(s, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
        .map_err(|e| format!("{s:?}: {e}"))
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Executes `cli`, writing tabular output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let catalog = cli.catalog.as_deref().map(Catalog::open).transpose()?;
    let ctx = Context {
        store: &cli.store,
        catalog: catalog.as_ref(),
        config,
    };
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(&ctx, a, out),
        Command::Daemon(a) => cmd_daemon(&ctx, a, out),
        Command::TuneEpsilon(a) => cmd_tune(&ctx, a, out),
        Command::Query(a) => cmd_query(&ctx, a, out),
        Command::Report(a) => cmd_report(&ctx, a, out),
        Command::GenSynth(a) => cmd_gen_synth(a, out),
    }
}

struct Context<'a> {
    store: &'a Path,
    catalog: Option<&'a Catalog>,
    config: Config,
}

impl Context<'_> {
    fn check_sensor(&self, sensor: SensorId) -> Result<()> {
        match self.catalog {
            Some(c) if c.registry_entry(sensor).is_none_or(|e| e.deleted_at.is_some()) => {
                Err(Error::UnknownSensor(sensor))
            }
            _ => Ok(()),
        }
    }

    /// Opens an existing store without creating it.
    fn existing_store(&self) -> Result<Store> {
        if !self.store.is_dir() {
            return Err(Error::InvalidArgument(format!("no store at {}", self.store.display())));
        }
        Store::open(self.store)
    }
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::Writer::from_writer(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn write_reports(out: &mut dyn Write, reports: &[MoveReport], header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        w.write_record(MoveReport::CSV_HEADER).map_err(csv_err)?;
    }
    for r in reports {
        w.write_record(r.csv_record()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_ingest(ctx: &Context, args: &IngestArgs, out: &mut dyn Write) -> Result<()> {
    let mut mover = ctx.config.mover.clone();
    if let Some(e) = args.default_epsilon {
        mover.default_epsilon = Epsilon::new(e)?;
    }
    for &(s, e) in &args.epsilons {
        mover.epsilons.insert(SensorId(s), Epsilon::new(e)?);
    }
    let mut map = SensorMap::new();
    for (column, sensor) in &args.map {
        map.insert(column.clone(), SensorId(*sensor));
    }
    // Parse before touching the store so a bad file leaves it untouched.
    let batch = read_csv(&args.file, &map)?;
    for (sensor, _) in &batch.columns {
        ctx.check_sensor(*sensor)?;
    }
    let store = Store::open(ctx.store)?;
    for (sensor, _) in &batch.columns {
        store.register_sensor(*sensor)?;
    }
    let executed_at = args.executed_at.unwrap_or_else(now);
    let result = ingest::ingest_file(&args.file, &map, &mover, &store, executed_at)?;
    for e in &result.row_errors {
        eprintln!("{}:{}: {}", args.file.display(), e.line, e.message);
    }
    write_reports(out, &result.reports, true)
}

fn cmd_daemon(ctx: &Context, args: &DaemonArgs, out: &mut dyn Write) -> Result<()> {
    for &s in &ctx.config.daemon.sensors {
        ctx.check_sensor(s)?;
    }
    let sensors = match (ctx.config.daemon.sensors.is_empty(), ctx.catalog) {
        (true, Some(cat)) => cat
            .list_sensors(&SensorFilter::default())
            .into_iter()
            .map(|e| e.sensor_id)
            .collect(),
        _ => ctx.config.daemon.sensors.clone(),
    };
    let store = Arc::new(Store::open(ctx.store)?);
    let staging_dir = ctx
        .config
        .daemon
        .staging_dir
        .clone()
        .unwrap_or_else(|| ctx.store.join("staging"));
    let staging = Arc::new(StagingStore::open(staging_dir)?);
    for &s in &sensors {
        staging.register(s);
    }

    let (stop_tx, stop_rx) = mpsc::channel::<()>();
    let signal_tx = stop_tx.clone();
    if let Err(e) = ctrlc::set_handler(move || {
        let _ = signal_tx.send(());
    }) {
        log::warn!("cannot install signal handler: {e}");
    }

    let intake_stop = Arc::new(AtomicBool::new(false));
    let intake = ctx.config.daemon.inbox.clone().map(|inbox| {
        let staging = staging.clone();
        let stop = intake_stop.clone();
        thread::spawn(move || run_inbox(&inbox, &staging, &stop))
    });

    write_reports(out, &[], true)?;
    let mut ticks = 0u64;
    let mut write_err = None;
    let outcome = ingest::run_daemon(&ctx.config.mover, &sensors, &store, &staging, &stop_rx, |tick| {
        for (sensor, e) in &tick.errors {
            eprintln!("sensor {sensor}: {e}");
        }
        if let Err(e) = write_reports(out, &tick.moves, false) {
            write_err.get_or_insert(e);
            let _ = stop_tx.send(());
        }
        ticks += 1;
        if args.ticks.is_some_and(|n| ticks >= n) {
            let _ = stop_tx.send(());
        }
    });
    intake_stop.store(true, Ordering::SeqCst);
    if let Some(h) = intake {
        let _ = h.join();
    }
    outcome?;
    write_err.map_or(Ok(()), Err)
}

/// Stages every `*.csv` file dropped into `inbox`, then renames it to
/// `*.staged` (or `*.rejected` if it cannot be read).
fn run_inbox(inbox: &Path, staging: &StagingStore, stop: &AtomicBool) {
    while !stop.load(Ordering::SeqCst) {
        let mut files: Vec<PathBuf> = match std::fs::read_dir(inbox) {
            Ok(rd) => rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect(),
            Err(e) => {
                log::warn!("inbox {}: {e}", inbox.display());
                Vec::new()
            }
        };
        files.sort();
        for file in files {
            let outcome = read_csv(&file, &SensorMap::new()).and_then(|batch| {
                for (sensor, points) in batch.columns {
                    for p in points {
                        staging.stage(sensor, p)?;
                    }
                }
                Ok(())
            });
            let ext = match &outcome {
                Ok(()) => "staged",
                Err(e) => {
                    log::error!("inbox file {}: {e}", file.display());
                    "rejected"
                }
            };
            if let Err(e) = std::fs::rename(&file, file.with_extension(ext)) {
                log::error!("cannot rename {}: {e}", file.display());
            }
        }
        thread::sleep(Duration::from_millis(200));
    }
}

fn load_history(ctx: &Context, args: &TuneArgs) -> Result<TimeSeries> {
    match (&args.input, args.sensor) {
        (Some(path), None) => {
            let map = match &args.column {
                Some(c) => SensorMap::new().with(c.clone(), SensorId(0)),
                None => {
                    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
                    let headers = rdr.headers().map_err(csv_err)?;
                    let column = headers
                        .get(1)
                        .ok_or_else(|| Error::Parse(format!("{}: no value column", path.display())))?;
                    SensorMap::new().with(column, SensorId(0))
                }
            };
            let batch = read_csv(path, &map)?;
            let (sensor, raw) = batch.columns.into_iter().next().expect("one mapped column");
            let raw: Vec<_> = raw
                .into_iter()
                .filter(|p| args.from.is_none_or(|f| p.timestamp >= f) && args.to.is_none_or(|t| p.timestamp <= t))
                .collect();
            Ok(resample_1s(sensor, &raw, ctx.config.mover.max_gap)?.series)
        }
        (None, Some(sensor)) => {
            let sensor = SensorId(sensor);
            ctx.check_sensor(sensor)?;
            let store = ctx.existing_store()?;
            let (from, to) = match (args.from, args.to) {
                (Some(f), Some(t)) => (f, t),
                _ => return Err(Error::InvalidArgument("--sensor needs --from and --to".into())),
            };
            store.query(&QuerySpec::materialized(sensor, from, to, 1))
        }
        _ => Err(Error::InvalidArgument("give exactly one of --input or --sensor".into())),
    }
}

fn cmd_tune(ctx: &Context, args: &TuneArgs, out: &mut dyn Write) -> Result<()> {
    let mut options = ctx.config.tune.clone();
    if let Some(c) = &args.candidates {
        options.candidates = c.iter().map(|&e| Epsilon::new(e)).collect::<Result<_>>()?;
    }
    if let Some(t) = args.steady_start {
        options.steady_state.start = t;
    }
    if let Some(t) = args.steady_end {
        options.steady_state.end = t;
    }
    if let Some(v) = args.expected {
        options.steady_state.expected_value = v;
    }
    options.steady_state.validate()?;

    let history = load_history(ctx, args)?;
    let outcome = tuner::tune(&history, &options)?;

    let mut w = csv_writer(out);
    let mut header: Vec<&str> = EpsilonReport::CSV_HEADER.to_vec();
    header.push("selected");
    w.write_record(&header).map_err(csv_err)?;
    for r in &outcome.reports {
        let mut rec = r.csv_record().to_vec();
        rec.push((r.epsilon == outcome.selection.epsilon).to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    eprintln!(
        "day {}: noise floor {:.4}; selected epsilon {} ({})",
        outcome.day,
        outcome.noise_floor.value(),
        outcome.selection.epsilon,
        outcome.selection.reason
    );
    Ok(())
}

/// Writes a series as `timestamp,value` CSV with ISO-8601 timestamps.
pub fn write_series_csv(series: &TimeSeries, out: &mut dyn Write) -> Result<()> {
    synth::write_csv(series, "value", out)
}

fn cmd_query(ctx: &Context, args: &QueryArgs, out: &mut dyn Write) -> Result<()> {
    let sensor = SensorId(args.sensor);
    ctx.check_sensor(sensor)?;
    let store = ctx.existing_store()?;
    let spec = QuerySpec {
        sensor,
        start: args.from,
        end: args.to,
        resolution: args.resolution,
    };
    write_series_csv(&store.query(&spec)?, out)
}

/// Compression summary of one stored sensor-day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayReport {
    pub sensor: SensorId,
    pub day: NaiveDate,
    pub points_before: usize,
    pub points_after: usize,
    pub reduction: f64,
    /// Present only when the original samples are known.
    pub errors: Option<(f64, f64, f64)>,
}

impl DayReport {
    pub const CSV_HEADER: [&'static str; 8] = [
        "sensor",
        "day",
        "points_before",
        "points_after",
        "reduction",
        "mae",
        "rmse",
        "max_error",
    ];

    pub fn csv_record(&self) -> [String; 8] {
        let (mae, rmse, max) = match self.errors {
            Some((a, r, m)) => (a.to_string(), r.to_string(), m.to_string()),
            None => Default::default(),
        };
        [
            self.sensor.to_string(),
            self.day.to_string(),
            self.points_before.to_string(),
            self.points_after.to_string(),
            self.reduction.to_string(),
            mae,
            rmse,
            max,
        ]
    }
}

/// Summarizes `day` of `sensor`. With `source`, points before compression
/// are the source samples of that day and errors compare them with the
/// stored curve; otherwise the 1 Hz grid covered by the stored curve stands
/// in for the original and no errors are given.
pub fn day_report(store: &Store, sensor: SensorId, day: NaiveDate, source: Option<&TimeSeries>) -> Result<DayReport> {
    let start = day_start(day);
    let end = start + SECONDS_PER_DAY - 1;
    let stored = store.query(&QuerySpec::raw(sensor, start, end))?;
    let curve = store.query(&QuerySpec::materialized(sensor, start, end, 1))?;
    let (before, errors) = match source {
        Some(src) => {
            let src = src.slice(start, end);
            if src.is_empty() {
                return Err(Error::InsufficientData(format!("source has no samples on {day}")));
            }
            let covered: Vec<_> = src
                .points()
                .iter()
                .filter(|p| {
                    curve
                        .points()
                        .binary_search_by_key(&p.timestamp, |c| c.timestamp)
                        .is_ok()
                })
                .copied()
                .collect();
            let errors = if covered.is_empty() {
                None
            } else {
                let at: Vec<Timestamp> = covered.iter().map(|p| p.timestamp).collect();
                let rebuilt = reconstruct(&curve, &at)?;
                let n = covered.len() as f64;
                let (mut abs, mut sq, mut max) = (0.0f64, 0.0f64, 0.0f64);
                for (o, r) in covered.iter().zip(rebuilt.points()) {
                    let e = (o.value - r.value).abs();
                    abs += e;
                    sq += e * e;
                    max = max.max(e);
                }
                Some((abs / n, (sq / n).sqrt(), max))
            };
            (src.len(), errors)
        }
        None => (curve.len(), None),
    };
    if before == 0 {
        return Err(Error::InsufficientData(format!("sensor {sensor} has no data on {day}")));
    }
    Ok(DayReport {
        sensor,
        day,
        points_before: before,
        points_after: stored.len(),
        reduction: 1.0 - stored.len() as f64 / before as f64,
        errors,
    })
}

fn load_source(path: &Path, column: &str, sensor: SensorId) -> Result<TimeSeries> {
    let batch = read_csv(path, &SensorMap::new().with(column, sensor))?;
    let (_, mut raw) = batch.columns.into_iter().next().expect("one mapped column");
    raw.sort_by_key(|p| p.timestamp);
    raw.dedup_by_key(|p| p.timestamp);
    TimeSeries::new(sensor, raw)
}

fn cmd_report(ctx: &Context, args: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let sensor = SensorId(args.sensor);
    ctx.check_sensor(sensor)?;
    let store = ctx.existing_store()?;
    if !store.sensors().contains(&sensor) {
        return Err(Error::UnknownSensor(sensor));
    }
    let column = args.column.clone().unwrap_or_else(|| sensor.to_string());
    let source = args
        .source
        .as_deref()
        .map(|p| load_source(p, &column, sensor))
        .transpose()?;
    let mut w = csv_writer(out);
    if args.plot {
        let start = day_start(args.day);
        let end = start + SECONDS_PER_DAY - 1;
        let curve = store.query(&QuerySpec::materialized(sensor, start, end, 1))?;
        let kept = store.query(&QuerySpec::raw(sensor, start, end))?;
        w.write_record(["timestamp", "original", "compressed", "kept"])
            .map_err(csv_err)?;
        for p in curve.points() {
            let original = source
                .as_ref()
                .and_then(|s| {
                    s.points()
                        .binary_search_by_key(&p.timestamp, |q| q.timestamp)
                        .ok()
                        .map(|i| s.points()[i].value.to_string())
                })
                .unwrap_or_default();
            let is_kept = kept
                .points()
                .binary_search_by_key(&p.timestamp, |q| q.timestamp)
                .is_ok();
            w.write_record([
                format_timestamp(p.timestamp),
                original,
                p.value.to_string(),
                u8::from(is_kept).to_string(),
            ])
            .map_err(csv_err)?;
        }
    } else {
        let report = day_report(&store, sensor, args.day, source.as_ref())?;
        w.write_record(DayReport::CSV_HEADER).map_err(csv_err)?;
        w.write_record(report.csv_record()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_gen_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let spec = SynthSpec {
        days: args.days,
        peak: args.peak,
        cloud_rate: args.cloud_rate,
        noise_amplitude: args.noise,
        seed: args.seed,
        start: args.start,
        ..SynthSpec::default()
    };
    let sensor = args.column.parse().unwrap_or(SensorId(0));
    let series = synth::generate(&spec, sensor)?;
    if args.out == Path::new("-") {
        synth::write_csv(&series, &args.column, out)
    } else {
        synth::write_csv_file(&series, &args.column, &args.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("solvault").chain(args.iter().copied())).unwrap()
    }

    fn run_to_string(args: &[&str]) -> Result<String> {
        let mut buf = Vec::new();
        run(&cli(args), &mut buf)?;
        Ok(String::from_utf8(buf).unwrap())
    }

    #[test]
    fn verbs_and_global_flags_parse() {
        for verb in [
            "ingest x.csv",
            "daemon",
            "tune-epsilon --input x.csv",
            "query --sensor 1 --from 0 --to 1",
            "report --sensor 1 --day 2021-06-01",
            "gen-synth --out -",
        ] {
            let mut args = vec!["--store", "s", "--catalog", "c.json", "--config", "c.toml"];
            args.extend(verb.split(' '));
            cli(&args);
        }
        assert!(Cli::try_parse_from(["solvault", "compress"]).is_err());
    }

    #[test]
    fn pairs_parse() {
        assert_eq!(parse_pair::<u64, f64>("3=2.5").unwrap(), (3, 2.5));
        assert!(parse_pair::<u64, f64>("3").is_err());
        assert!(parse_pair::<u64, f64>("x=1").is_err());
    }

    #[test]
    fn materialized_query_of_a_ramp() {
        let dir = tempfile::tempdir().unwrap();
        let store_dir = dir.path().join("store");
        {
            let store = Store::open_with(&store_dir, false).unwrap();
            store.register_sensor(SensorId(1)).unwrap();
            store
                .append(
                    SensorId(1),
                    &TimeSeries::from_pairs(SensorId(1), &[(0, 0.0), (10, 10.0)]).unwrap(),
                )
                .unwrap();
        }
        let s = store_dir.to_str().unwrap();
        let csv = run_to_string(&[
            "--store",
            s,
            "query",
            "--sensor",
            "1",
            "--from",
            "0",
            "--to",
            "10",
            "--resolution",
            "1",
        ])
        .unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 12);
        assert_eq!(lines[0], "timestamp,value");
        assert_eq!(lines[6], "1970-01-01T00:00:05Z,5");
        let empty = run_to_string(&["--store", s, "query", "--sensor", "1", "--from", "100", "--to", "200"]).unwrap();
        assert_eq!(empty, "timestamp,value\n");
    }

    #[test]
    fn read_only_commands_do_not_create_a_store() {
        let dir = tempfile::tempdir().unwrap();
        let store_dir = dir.path().join("missing");
        let s = store_dir.to_str().unwrap();
        assert!(run_to_string(&["--store", s, "query", "--sensor", "1", "--from", "0", "--to", "1"]).is_err());
        assert!(run_to_string(&["--store", s, "report", "--sensor", "1", "--day", "2021-06-01"]).is_err());
        assert!(!store_dir.exists());
    }

    #[test]
    fn constant_day_report() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("c.csv");
        let t0 = 1_622_505_600;
        let mut text = String::from("timestamp,4\n");
        for t in 0..SECONDS_PER_DAY {
            text += &format!("{},3\n", t0 + t);
        }
        std::fs::write(&csv_path, text).unwrap();
        let s = dir.path().join("store");
        let s = s.to_str().unwrap();
        let c = csv_path.to_str().unwrap();
        run_to_string(&["--store", s, "ingest", c]).unwrap();
        let out = run_to_string(&[
            "--store",
            s,
            "report",
            "--sensor",
            "4",
            "--day",
            "2021-06-01",
            "--source",
            c,
        ])
        .unwrap();
        let row: Vec<String> = out.lines().nth(1).unwrap().split(',').map(String::from).collect();
        assert_eq!(row[2], "86400");
        assert_eq!(row[3], "2");
        assert_eq!(row[4].parse::<f64>().unwrap(), 1.0 - 2.0 / 86_400.0);
        assert_eq!(&row[5..], ["0", "0", "0"]);
        assert!(run_to_string(&["--store", s, "report", "--sensor", "9", "--day", "2021-06-01"]).is_err());
    }
}
