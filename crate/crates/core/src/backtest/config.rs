//! Plain-text `key = value` run configuration with optional `[instrument]` sections.
//!
//! Keys before the first section apply to every instrument; section keys override
//! them. Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use super::BacktestError;
use crate::metrics::SdConvention;
use crate::params::HeuristicConfig;
use crate::price_series::{PriceSource, TickFormat, TimestampFormat};
use crate::timebase::PeriodSpec;
use crate::trading::{EngineConfig, ExecutionDelay, Thresholds, VolumeMode};

const KNOWN_KEYS: &[&str] = &[
    "instrument",
    "manifest",
    "zone_start",
    "zone_length",
    "from",
    "to",
    "warmup_days",
    "price_source",
    "timestamp_format",
    "out_of_order_tolerance_ms",
    "bandwidth",
    "multiplicator",
    "discount",
    "m_basic",
    "slope_factors",
    "n_f",
    "n_s",
    "grid_width_factor",
    "fallback_slope",
    "fallback_range",
    "thresholds",
    "symmetric",
    "in_long",
    "out_long",
    "in_short",
    "out_short",
    "delay",
    "start_balance",
    "volume_mode",
    "volume",
    "same_second_reentry",
    "rf_file",
    "output_dir",
    "sd_convention",
    "trace",
    "trace_points",
    "histogram_bins",
];

/// Sections of a config file: `""` holds the global keys.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, BacktestError> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        sections.insert(String::new(), BTreeMap::new());
        let mut current = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = name.trim().to_string();
                if current.is_empty() || sections.contains_key(&current) {
                    return Err(BacktestError::Config(format!("line {}: bad or duplicate section [{name}]", i + 1)));
                }
                sections.insert(current.clone(), BTreeMap::new());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| BacktestError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().to_ascii_lowercase();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(BacktestError::Config(format!("line {}: unknown key `{key}`", i + 1)));
            }
            let section = sections.get_mut(&current).expect("section exists");
            if section.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(BacktestError::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { sections })
    }

    /// Merged keys for one instrument. With no name, the file must contain at most one section.
    pub fn resolve(&self, instrument: Option<&str>) -> Result<(String, BTreeMap<String, String>), BacktestError> {
        let named: Vec<&String> = self.sections.keys().filter(|k| !k.is_empty()).collect();
        let name = match (instrument, named.as_slice()) {
            (Some(n), _) => {
                if !named.is_empty() && !self.sections.contains_key(n) {
                    return Err(BacktestError::Config(format!("no section [{n}] in config")));
                }
                n.to_string()
            }
            (None, []) => String::new(),
            (None, [one]) => (*one).clone(),
            (None, _) => {
                return Err(BacktestError::Config("config has several instruments; select one".into()));
            }
        };
        let mut keys = self.sections[""].clone();
        if let Some(sec) = self.sections.get(&name).filter(|_| !name.is_empty()) {
            keys.extend(sec.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        let name = keys.get("instrument").cloned().unwrap_or(name);
        Ok((name, keys))
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub trace: bool,
    pub output_dir: Option<PathBuf>,
    pub delay: Option<u32>,
    /// Symmetric `(in, out)` levels.
    pub thresholds: Option<(f64, f64)>,
    pub bandwidth: Option<usize>,
    pub multiplicator: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestConfig {
    pub instrument: String,
    /// Manifest path as written in the config.
    pub manifest: PathBuf,
    pub zone_offset: i64,
    pub zone_length: i64,
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub warmup_days: usize,
    pub price_source: PriceSource,
    pub tick_format: TickFormat,
    pub heuristics: HeuristicConfig<f64>,
    pub thresholds: Thresholds<f64>,
    pub symmetric: bool,
    pub delay: ExecutionDelay,
    pub start_balance: f64,
    pub volume: VolumeMode<f64>,
    pub same_second_reentry: bool,
    pub rf_file: Option<PathBuf>,
    pub sd_convention: SdConvention,
    pub trace: bool,
    /// Points per day in plot CSVs; 0 keeps every second.
    pub trace_points: usize,
    pub histogram_bins: usize,
    #[serde(skip)]
    pub output_dir: PathBuf,
    /// Directory that relative input paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn cfg_err(key: &str, value: &str, what: &str) -> BacktestError {
    BacktestError::Config(format!("`{key} = {value}`: {what}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, BacktestError> {
    value.parse().map_err(|_| cfg_err(key, value, "not a number"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, BacktestError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(cfg_err(key, value, "expected true or false")),
    }
}

fn parse_date(key: &str, value: &str) -> Result<NaiveDate, BacktestError> {
    NaiveDate::parse_from_str(value, "%Y-%m-%d").map_err(|_| cfg_err(key, value, "expected YYYY-MM-DD"))
}

/// Seconds as an integer or `HH:MM[:SS]`.
pub fn parse_clock(key: &str, value: &str) -> Result<i64, BacktestError> {
    if let Ok(s) = value.parse::<i64>() {
        return Ok(s);
    }
    let parts: Vec<&str> = value.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(cfg_err(key, value, "expected seconds or HH:MM[:SS]"));
    }
    let mut total = 0i64;
    for (p, mult) in parts.iter().zip([3600, 60, 1]) {
        let v: i64 = p.parse().map_err(|_| cfg_err(key, value, "expected seconds or HH:MM[:SS]"))?;
        total += v * mult;
    }
    Ok(total)
}

/// `IN/OUT` pair of symmetric threshold levels.
pub fn parse_threshold_pair(value: &str) -> Result<(f64, f64), BacktestError> {
    let (a, b) = value
        .split_once('/')
        .ok_or_else(|| cfg_err("thresholds", value, "expected IN/OUT"))?;
    Ok((parse_num("thresholds", a.trim())?, parse_num("thresholds", b.trim())?))
}

impl BacktestConfig {
    pub fn from_file(path: &Path, instrument: Option<&str>, overrides: &Overrides) -> Result<Self, BacktestError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BacktestError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let file = ConfigFile::parse(&text)?;
        let (name, keys) = file.resolve(instrument)?;
        Self::from_keys(name, &keys, base, overrides)
    }

    pub fn from_keys(
        instrument: String,
        keys: &BTreeMap<String, String>,
        base_dir: PathBuf,
        overrides: &Overrides,
    ) -> Result<Self, BacktestError> {
        let get = |k: &str| keys.get(k).map(String::as_str);
        let require = |k: &str| get(k).ok_or_else(|| BacktestError::Config(format!("missing key `{k}`")));
        let num_or = |k: &str, d: f64| get(k).map_or(Ok(d), |v| parse_num(k, v));
        let usize_or = |k: &str, d: usize| get(k).map_or(Ok(d), |v| parse_num(k, v));
        let bool_or = |k: &str, d: bool| get(k).map_or(Ok(d), |v| parse_bool(k, v));

        let manifest = PathBuf::from(require("manifest")?);
        let zone_offset = parse_clock("zone_start", require("zone_start")?)?;
        let zone_length = parse_clock("zone_length", require("zone_length")?)?;
        PeriodSpec::new(0, zone_offset, zone_length).map_err(|e| BacktestError::Config(e.to_string()))?;

        let from = match overrides.from {
            Some(d) => d,
            None => parse_date("from", require("from")?)?,
        };
        let to = match overrides.to {
            Some(d) => d,
            None => parse_date("to", require("to")?)?,
        };
        if to < from {
            return Err(BacktestError::Config(format!("empty date range {from} .. {to}")));
        }

        let price_source: PriceSource = get("price_source")
            .map_or(Ok(PriceSource::Ask), |v| v.parse().map_err(|e: String| cfg_err("price_source", v, &e)))?;
        let timestamp = match get("timestamp_format").map(str::to_ascii_lowercase).as_deref() {
            None | Some("auto") => TimestampFormat::Auto,
            Some("epoch_ms") | Some("epoch_millis") => TimestampFormat::EpochMillis,
            Some("iso8601") => TimestampFormat::Iso8601,
            Some(v) => return Err(cfg_err("timestamp_format", v, "expected auto, epoch_ms or iso8601")),
        };
        let tick_format = TickFormat {
            timestamp,
            out_of_order_tolerance_ms: get("out_of_order_tolerance_ms").map_or(Ok(0), |v| parse_num("out_of_order_tolerance_ms", v))?,
        };

        let defaults = HeuristicConfig::<f64>::default();
        let slope_factors = match get("slope_factors") {
            Some(v) => Some(
                v.split(',')
                    .map(|f| parse_num::<f64>("slope_factors", f.trim()))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        let heuristics = HeuristicConfig {
            m_basic: get("m_basic").map(|v| parse_num("m_basic", v)).transpose()?,
            slope_factors,
            n_f: usize_or("n_f", defaults.n_f)?,
            n_s: usize_or("n_s", defaults.n_s)?,
            grid_width_factor: num_or("grid_width_factor", defaults.grid_width_factor)?,
            fallback_slope: num_or("fallback_slope", defaults.fallback_slope)?,
            fallback_range: num_or("fallback_range", defaults.fallback_range)?,
            bandwidth: overrides.bandwidth.map_or_else(|| usize_or("bandwidth", defaults.bandwidth), Ok)?,
            multiplicator: overrides.multiplicator.map_or_else(|| num_or("multiplicator", defaults.multiplicator), Ok)?,
            discount: get("discount").map(|v| parse_num("discount", v)).transpose()?,
        };
        if heuristics.bandwidth == 0 || !(heuristics.multiplicator > 0.0) || heuristics.n_s < 2 {
            return Err(BacktestError::Config("bandwidth >= 1, multiplicator > 0 and n_s >= 2 required".into()));
        }

        let symmetric = bool_or("symmetric", true)?;
        let thresholds = if let Some((i, o)) = overrides.thresholds {
            Thresholds::symmetric(i, o)
        } else if let Some(v) = get("thresholds") {
            let (i, o) = parse_threshold_pair(v)?;
            Thresholds::symmetric(i, o)
        } else if symmetric {
            Thresholds::symmetric(parse_num("in_long", require("in_long")?)?, parse_num("out_long", require("out_long")?)?)
        } else {
            Thresholds::new(
                parse_num("in_long", require("in_long")?)?,
                parse_num("out_long", require("out_long")?)?,
                parse_num("in_short", require("in_short")?)?,
                parse_num("out_short", require("out_short")?)?,
            )
        }
        .map_err(|e| BacktestError::Config(e.to_string()))?;

        let delay_secs = match overrides.delay {
            Some(d) => d,
            None => get("delay").map_or(Ok(0), |v| parse_num("delay", v))?,
        };
        let delay = ExecutionDelay::from_seconds(delay_secs)
            .ok_or_else(|| BacktestError::Config(format!("delay must be 0 or 1, got {delay_secs}")))?;

        let start_balance = num_or("start_balance", 10_000.0)?;
        if !(start_balance > 0.0) {
            return Err(BacktestError::Config("start_balance must be positive".into()));
        }
        let volume = match get("volume_mode").unwrap_or("reinvest") {
            "reinvest" | "reinvest_100" => VolumeMode::Reinvest,
            "fixed" => {
                let v: f64 = parse_num("volume", require("volume")?)?;
                if !(v > 0.0) {
                    return Err(BacktestError::Config("volume must be positive".into()));
                }
                VolumeMode::Fixed(v)
            }
            other => return Err(cfg_err("volume_mode", other, "expected reinvest or fixed")),
        };
        let sd_convention = match get("sd_convention").unwrap_or("sample") {
            "sample" => SdConvention::Sample,
            "population" => SdConvention::Population,
            other => return Err(cfg_err("sd_convention", other, "expected sample or population")),
        };
        let output_dir = match &overrides.output_dir {
            Some(p) => p.clone(),
            None => base_dir.join(get("output_dir").unwrap_or("out")),
        };

        Ok(Self {
            instrument,
            manifest,
            zone_offset,
            zone_length,
            from,
            to,
            warmup_days: usize_or("warmup_days", 1)?,
            price_source,
            tick_format,
            heuristics,
            thresholds,
            symmetric,
            delay,
            start_balance,
            volume,
            same_second_reentry: bool_or("same_second_reentry", true)?,
            rf_file: get("rf_file").map(PathBuf::from),
            sd_convention,
            trace: overrides.trace || bool_or("trace", false)?,
            trace_points: usize_or("trace_points", 1000)?,
            histogram_bins: usize_or("histogram_bins", 50)?.max(1),
            output_dir,
            base_dir,
        })
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn engine_config(&self) -> EngineConfig<f64> {
        EngineConfig {
            thresholds: self.thresholds,
            volume: self.volume,
            delay: self.delay,
            same_second_reentry: self.same_second_reentry,
        }
    }

    pub fn period(&self, date: NaiveDate) -> PeriodSpec {
        PeriodSpec::for_date(date, self.zone_offset, self.zone_length).expect("zone validated at load")
    }

    /// Every calendar day of the inclusive range.
    pub fn calendar(&self) -> Vec<NaiveDate> {
        self.from.iter_days().take_while(|d| *d <= self.to).collect()
    }
}
