//! Tick ingestion and resampling to a per-second last-price series.
//!
//! Tick files are CSV with a single header row `timestamp,ask,bid[,askVolume,bidVolume]`.
//! The value assigned to second `s` is the last tick with `timestamp_ms < (s + 1) * 1000`,
//! so a tick exactly on a second boundary belongs to the new second and nothing that
//! happens after second `s` can influence it.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::timebase::ZoneInterval;

#[derive(Debug, Error)]
pub enum PriceSeriesError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("timestamps regress at data row {row}: {timestamp_ms} ms after {previous_ms} ms")]
    OutOfOrder { row: usize, timestamp_ms: i64, previous_ms: i64 },
    #[error("no tick precedes or lies within the zone")]
    EmptySeries,
    #[error("invalid second series: {0}")]
    InvalidSeries(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
}

/// One ask/bid quote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRecord<T> {
    pub timestamp_ms: i64,
    pub ask: T,
    pub bid: T,
}

/// How the timestamp column is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampFormat {
    /// Integer milliseconds since the Unix epoch.
    EpochMillis,
    /// ISO-8601 date-time with optional fractional seconds and optional offset.
    Iso8601,
    /// Integer if the field is all digits, ISO-8601 otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickFormat {
    pub timestamp: TimestampFormat,
    /// Largest tolerated backwards step in milliseconds. Tolerated regressions are
    /// clamped to the previous timestamp.
    pub out_of_order_tolerance_ms: i64,
}

impl Default for TickFormat {
    fn default() -> Self {
        Self { timestamp: TimestampFormat::Auto, out_of_order_tolerance_ms: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTicks<T> {
    pub ticks: Vec<TickRecord<T>>,
    /// Rows dropped because a field did not parse or the quote was invalid.
    pub skipped: usize,
}

fn parse_timestamp_ms(field: &str, format: TimestampFormat) -> Option<i64> {
    let is_int = !field.is_empty() && field.bytes().all(|b| b.is_ascii_digit() || b == b'-');
    match format {
        TimestampFormat::EpochMillis => field.parse().ok(),
        TimestampFormat::Iso8601 => parse_iso_ms(field),
        TimestampFormat::Auto if is_int => field.parse().ok(),
        TimestampFormat::Auto => parse_iso_ms(field),
    }
}

fn parse_iso_ms(field: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(field) {
        return Some(dt.timestamp_millis());
    }
    const NAIVE: [&str; 3] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y.%m.%d %H:%M:%S%.f"];
    NAIVE
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(field, f).ok())
        .map(|dt| dt.and_utc().timestamp_millis())
}

fn check_header(header: &csv::StringRecord) -> Result<(), PriceSeriesError> {
    let names: Vec<String> = header.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    let expected = ["timestamp", "ask", "bid", "askvolume", "bidvolume"];
    let ok = names.len() >= 3 && names.len() <= 5 && names.iter().zip(expected.iter()).all(|(n, e)| n == e);
    if ok {
        Ok(())
    } else {
        Err(PriceSeriesError::Format(format!(
            "expected header timestamp,ask,bid[,askVolume,bidVolume], found {}",
            names.join(",")
        )))
    }
}

/// Parses a tick CSV stream. Malformed rows and rows with `bid > ask` or
/// non-positive prices are skipped and counted.
pub fn parse_ticks<T: Scalar, R: Read>(reader: R, format: &TickFormat) -> Result<ParsedTicks<T>, PriceSeriesError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| PriceSeriesError::Format(e.to_string()))?.clone();
    if header.is_empty() {
        return Err(PriceSeriesError::Format("missing header row".into()));
    }
    check_header(&header)?;

    let mut ticks: Vec<TickRecord<T>> = Vec::new();
    let mut skipped = 0;
    for (row, rec) in rdr.records().enumerate() {
        let Ok(rec) = rec else {
            skipped += 1;
            continue;
        };
        let parsed = (rec.len() >= 3)
            .then(|| {
                let ts = parse_timestamp_ms(&rec[0], format.timestamp)?;
                let ask = rec[1].parse::<T>().ok()?;
                let bid = rec[2].parse::<T>().ok()?;
                Some((ts, ask, bid))
            })
            .flatten();
        let Some((mut timestamp_ms, ask, bid)) = parsed else {
            skipped += 1;
            continue;
        };
        if !(bid > T::zero() && ask >= bid && ask.is_finite()) {
            skipped += 1;
            continue;
        }
        if let Some(prev) = ticks.last() {
            if timestamp_ms < prev.timestamp_ms {
                if prev.timestamp_ms - timestamp_ms > format.out_of_order_tolerance_ms {
                    return Err(PriceSeriesError::OutOfOrder {
                        row: row + 1,
                        timestamp_ms,
                        previous_ms: prev.timestamp_ms,
                    });
                }
                timestamp_ms = prev.timestamp_ms;
            }
        }
        ticks.push(TickRecord { timestamp_ms, ask, bid });
    }
    Ok(ParsedTicks { ticks, skipped })
}

pub fn load_ticks<T: Scalar>(path: &Path, format: &TickFormat) -> Result<ParsedTicks<T>, PriceSeriesError> {
    let file = File::open(path).map_err(|source| PriceSeriesError::Io { path: path.to_path_buf(), source })?;
    parse_ticks(BufReader::new(file), format)
}

/// Which quote the oscillator treats as the last price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceSource {
    #[default]
    Ask,
    Bid,
    Mid,
}

impl std::str::FromStr for PriceSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ask" => Ok(Self::Ask),
            "bid" => Ok(Self::Bid),
            "mid" => Ok(Self::Mid),
            other => Err(format!("unknown price source {other:?}")),
        }
    }
}

/// Per-second forward-filled ask/bid quotes over one zone of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondSeries<T> {
    t_start: i64,
    ask: Vec<T>,
    bid: Vec<T>,
    present: Vec<bool>,
}

impl<T: Scalar> SecondSeries<T> {
    pub fn from_parts(t_start: i64, ask: Vec<T>, bid: Vec<T>, present: Vec<bool>) -> Result<Self, PriceSeriesError> {
        if ask.len() != bid.len() || ask.len() != present.len() {
            return Err(PriceSeriesError::InvalidSeries("ask, bid and present lengths differ".into()));
        }
        if let Some(i) = (0..ask.len()).find(|&i| present[i] && !(ask[i] >= bid[i])) {
            return Err(PriceSeriesError::InvalidSeries(format!("bid above ask at offset {i}")));
        }
        Ok(Self { t_start, ask, bid, present })
    }

    pub fn t_start(&self) -> i64 {
        self.t_start
    }

    /// Epoch second of the last sample.
    pub fn t_end(&self) -> i64 {
        self.t_start + self.ask.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.ask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ask.is_empty()
    }

    pub fn time_at(&self, i: usize) -> i64 {
        self.t_start + i as i64
    }

    pub fn is_present(&self, i: usize) -> bool {
        self.present[i]
    }

    pub fn ask(&self) -> &[T] {
        &self.ask
    }

    pub fn bid(&self) -> &[T] {
        &self.bid
    }

    pub fn present(&self) -> &[bool] {
        &self.present
    }

    /// `(ask, bid)` at offset `i`, if any tick has been seen by then.
    pub fn quote(&self, i: usize) -> Option<(T, T)> {
        self.present[i].then(|| (self.ask[i], self.bid[i]))
    }

    pub fn price(&self, i: usize, source: PriceSource) -> Option<T> {
        self.quote(i).map(|(a, b)| match source {
            PriceSource::Ask => a,
            PriceSource::Bid => b,
            PriceSource::Mid => (a + b) / T::of(2.0),
        })
    }

    /// First offset carrying a price.
    pub fn first_present(&self) -> Option<usize> {
        self.present.iter().position(|&p| p)
    }

    /// Re-expresses the series as one tick at the start of every present second.
    pub fn to_ticks(&self) -> Vec<TickRecord<T>> {
        (0..self.len())
            .filter_map(|i| {
                self.quote(i).map(|(ask, bid)| TickRecord { timestamp_ms: self.time_at(i) * 1000, ask, bid })
            })
            .collect()
    }
}

/// Assigns to every second of `zone` the last quote strictly before the next second.
///
/// Seconds before the first tick have `present = false`. Ticks before the zone seed
/// the first in-zone seconds.
pub fn resample_to_seconds<T: Scalar>(
    ticks: &[TickRecord<T>],
    zone: ZoneInterval,
) -> Result<SecondSeries<T>, PriceSeriesError> {
    let n = zone.n_seconds();
    let mut ask = Vec::with_capacity(n);
    let mut bid = Vec::with_capacity(n);
    let mut present = Vec::with_capacity(n);
    let mut next = 0usize;
    let mut last: Option<&TickRecord<T>> = None;
    for s in zone.start..=zone.end {
        let boundary = (s + 1) * 1000;
        while next < ticks.len() && ticks[next].timestamp_ms < boundary {
            last = Some(&ticks[next]);
            next += 1;
        }
        match last {
            Some(t) => {
                ask.push(t.ask);
                bid.push(t.bid);
                present.push(true);
            }
            None => {
                ask.push(T::zero());
                bid.push(T::zero());
                present.push(false);
            }
        }
    }
    if last.is_none() {
        return Err(PriceSeriesError::EmptySeries);
    }
    SecondSeries::from_parts(zone.start, ask, bid, present)
}

/// True if at least one tick falls inside the zone (as resampled, i.e. before `(end + 1) * 1000`).
pub fn has_tick_in_zone<T>(ticks: &[TickRecord<T>], zone: ZoneInterval) -> bool {
    let lo = zone.start * 1000;
    let hi = (zone.end + 1) * 1000;
    ticks.iter().any(|t| t.timestamp_ms >= lo && t.timestamp_ms < hi)
}

/// Mapping from trading dates to tick files, one file per instrument per day.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: BTreeMap<NaiveDate, PathBuf>,
}

impl Manifest {
    /// Parses `YYYY-MM-DD <path>` lines; relative paths are resolved against `base_dir`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, PriceSeriesError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| PriceSeriesError::Manifest { line: i + 1, message };
            let (date, path) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| err("expected `YYYY-MM-DD <path>`".into()))?;
            let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|e| err(format!("bad date: {e}")))?;
            let path = PathBuf::from(path.trim());
            let path = if path.is_absolute() { path } else { base_dir.join(path) };
            if entries.insert(date, path).is_some() {
                return Err(err(format!("duplicate date {date}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, PriceSeriesError> {
        let text = std::fs::read_to_string(path).map_err(|source| PriceSeriesError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn get(&self, date: NaiveDate) -> Option<&Path> {
        self.entries.get(&date).map(PathBuf::as_path)
    }
}
