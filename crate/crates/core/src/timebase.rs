//! Seconds-based time model: trading periods, zones of interest and per-period
//! price summaries (high, low, close, pivot).
//!
//! All times are Unix seconds in the data's own timestamp frame. A period is one
//! calendar day starting at 00:00 of that frame; the zone of interest is the closed
//! interval `[period_start + zone_offset, period_start + zone_offset + zone_length]`.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::price_series::{PriceSource, SecondSeries};
use crate::scalar::Scalar;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimebaseError {
    #[error("invalid period spec: {0}")]
    InvalidSpec(String),
    #[error("no price observed inside the zone of interest")]
    EmptyPeriod,
}

/// Start of a period plus the location of its zone of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodSpec {
    period_start: i64,
    zone_offset: i64,
    zone_length: i64,
}

/// Closed interval of epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZoneInterval {
    pub start: i64,
    pub end: i64,
}

impl ZoneInterval {
    /// Number of whole seconds contained in the closed interval.
    pub fn n_seconds(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t <= self.end
    }
}

impl PeriodSpec {
    pub fn new(period_start: i64, zone_offset: i64, zone_length: i64) -> Result<Self, TimebaseError> {
        if zone_offset < 0 {
            return Err(TimebaseError::InvalidSpec(format!("zone offset {zone_offset} is negative")));
        }
        if zone_length <= 0 {
            return Err(TimebaseError::InvalidSpec(format!("zone length {zone_length} must be positive")));
        }
        if zone_offset + zone_length > SECONDS_PER_DAY {
            return Err(TimebaseError::InvalidSpec(format!(
                "zone [{zone_offset}, {}] exceeds one day",
                zone_offset + zone_length
            )));
        }
        Ok(Self { period_start, zone_offset, zone_length })
    }

    /// Period starting at midnight of `date` in the timestamp frame of the data.
    pub fn for_date(date: NaiveDate, zone_offset: i64, zone_length: i64) -> Result<Self, TimebaseError> {
        Self::new(day_start(date), zone_offset, zone_length)
    }

    pub fn period_start(&self) -> i64 {
        self.period_start
    }

    pub fn zone_offset(&self) -> i64 {
        self.zone_offset
    }

    pub fn zone_length(&self) -> i64 {
        self.zone_length
    }

    pub fn zone_interval(&self) -> ZoneInterval {
        let start = self.period_start + self.zone_offset;
        ZoneInterval { start, end: start + self.zone_length }
    }
}

/// Epoch second of 00:00 on `date`.
pub fn day_start(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc().timestamp()
}

/// Calendar date containing epoch second `t`.
pub fn date_of(t: i64) -> NaiveDate {
    chrono::DateTime::from_timestamp(t.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY, 0)
        .expect("timestamp in range")
        .date_naive()
}

/// Hour of day (0..24) of epoch second `t`.
pub fn hour_of(t: i64) -> u32 {
    (t.rem_euclid(SECONDS_PER_DAY) / 3600) as u32
}

/// High, low, close and pivot point of one zone of interest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary<T> {
    pub max_price: T,
    pub min_price: T,
    pub close_price: T,
    pub pivot: T,
}

impl<T: Scalar> PeriodSummary<T> {
    pub fn from_hlc(max_price: T, min_price: T, close_price: T) -> Self {
        let three = T::of(3.0);
        // Rounding of the three-term sum may push the mean one ulp outside [min, max].
        let pivot = ((max_price + min_price + close_price) / three).max(min_price).min(max_price);
        Self { max_price, min_price, close_price, pivot }
    }

    /// `max - min`, the previous-period range used by the parameter heuristics.
    pub fn range(&self) -> T {
        self.max_price - self.min_price
    }
}

/// Summarizes the in-zone seconds of `series` that carry a price.
///
/// The close is the price at the last second of the series (the zone end).
pub fn summarize_period<T: Scalar>(
    series: &SecondSeries<T>,
    source: PriceSource,
) -> Result<PeriodSummary<T>, TimebaseError> {
    let mut hi: Option<T> = None;
    let mut lo: Option<T> = None;
    let mut close: Option<T> = None;
    for i in 0..series.len() {
        if let Some(p) = series.price(i, source) {
            hi = Some(hi.map_or(p, |h| h.max(p)));
            lo = Some(lo.map_or(p, |l| l.min(p)));
            close = Some(p);
        }
    }
    match (hi, lo, close) {
        (Some(h), Some(l), Some(c)) => Ok(PeriodSummary::from_hlc(h, l, c)),
        _ => Err(TimebaseError::EmptyPeriod),
    }
}
