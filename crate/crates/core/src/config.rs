//! TOML configuration file. See `docs/config.example.toml`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ingest::MoverConfig;
use crate::rdp::Epsilon;
use crate::series::SensorId;
use crate::tuner::{FluctuationWindow, SteadyStateSpec, TuneOptions, DEFAULT_KNEE_THRESHOLD};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    version: u32,
    #[serde(default)]
    mover: RawMover,
    #[serde(default)]
    steady_state: SteadyStateSpec,
    #[serde(default)]
    tuner: RawTuner,
    #[serde(default)]
    daemon: RawDaemon,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawMover {
    period_secs: u64,
    max_gap_secs: i64,
    default_epsilon: f64,
    metric: String,
    epsilons: BTreeMap<String, f64>,
}

impl Default for RawMover {
    fn default() -> Self {
        let d = MoverConfig::default();
        Self {
            period_secs: d.period.as_secs(),
            max_gap_secs: d.max_gap,
            default_epsilon: d.default_epsilon.value(),
            metric: d.metric.to_string(),
            epsilons: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawTuner {
    candidates: Vec<f64>,
    window_secs: i64,
    knee_threshold: f64,
}

impl Default for RawTuner {
    fn default() -> Self {
        Self {
            candidates: vec![1.0, 5.0, 10.0, 25.0],
            window_secs: FluctuationWindow::default().seconds(),
            knee_threshold: DEFAULT_KNEE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawDaemon {
    sensors: Vec<u64>,
    staging_dir: Option<PathBuf>,
    inbox: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaemonSettings {
    pub sensors: Vec<SensorId>,
    /// Defaults to `<store>/staging` when unset.
    pub staging_dir: Option<PathBuf>,
    /// Directory polled for CSV files whose rows are staged as live samples.
    pub inbox: Option<PathBuf>,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub mover: MoverConfig,
    pub tune: TuneOptions,
    pub daemon: DaemonSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            mover: MoverConfig::default(),
            tune: TuneOptions::default(),
            daemon: DaemonSettings {
                sensors: Vec::new(),
                staging_dir: None,
                inbox: None,
            },
        }
    }
}

fn epsilon(v: f64, what: &str) -> Result<Epsilon> {
    Epsilon::new(v).map_err(|e| Error::InvalidArgument(format!("{what}: {e}")))
}

impl Config {
    /// Reads and validates a config file. Relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.daemon.staging_dir, &mut config.daemon.inbox]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: Raw = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.version != CONFIG_VERSION {
            return Err(Error::Parse(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                raw.version
            )));
        }

        let mut epsilons = BTreeMap::new();
        for (k, v) in &raw.mover.epsilons {
            let sensor: SensorId = k
                .parse()
                .map_err(|_| Error::Parse(format!("mover.epsilons: {k:?} is not a sensor id")))?;
            epsilons.insert(sensor, epsilon(*v, &format!("mover.epsilons.{k}"))?);
        }
        let mover = MoverConfig {
            period: Duration::from_secs(raw.mover.period_secs),
            max_gap: raw.mover.max_gap_secs,
            default_epsilon: epsilon(raw.mover.default_epsilon, "mover.default_epsilon")?,
            epsilons,
            metric: raw.mover.metric.parse()?,
        };
        mover.validate()?;

        raw.steady_state.validate()?;
        let tune = TuneOptions {
            window: FluctuationWindow::new(raw.tuner.window_secs)?,
            steady_state: raw.steady_state,
            candidates: raw
                .tuner
                .candidates
                .iter()
                .map(|&c| epsilon(c, "tuner.candidates"))
                .collect::<Result<_>>()?,
            metric: mover.metric,
            knee_threshold: raw.tuner.knee_threshold,
        };
        if tune.candidates.is_empty() || tune.candidates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "tuner.candidates must be non-empty and strictly increasing".into(),
            ));
        }

        let mut sensors: Vec<SensorId> = raw.daemon.sensors.into_iter().map(SensorId).collect();
        sensors.sort();
        if sensors.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("daemon.sensors lists a sensor twice".into()));
        }
        Ok(Self {
            mover,
            tune,
            daemon: DaemonSettings {
                sensors,
                staging_dir: raw.daemon.staging_dir,
                inbox: raw.daemon.inbox,
            },
        })
    }
}
