//! Profitability statistics: monthly returns, Sharpe ratios, trade characteristics
//! and hour-of-day profiles.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::timebase::{date_of, hour_of};
use crate::trading::TradeRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("need at least two months for a Sharpe ratio, got {0}")]
    TooFewMonths(usize),
    #[error("excess returns have zero variance")]
    DegenerateVariance,
    #[error("no risk-free yield for month {0}")]
    MissingData(YearMonth),
    #[error("risk-free file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn of_date(d: NaiveDate) -> Self {
        Self { year: d.year(), month: d.month() }
    }

    pub fn of_time(t: i64) -> Self {
        Self::of_date(date_of(t))
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self { year: self.year + 1, month: 1 }
        } else {
            Self { year: self.year, month: self.month + 1 }
        }
    }

    /// All months touched by the inclusive date range.
    pub fn range(from: NaiveDate, to: NaiveDate) -> Vec<Self> {
        let (mut m, last) = (Self::of_date(from), Self::of_date(to));
        let mut out = Vec::new();
        while m <= last {
            out.push(m);
            m = m.next();
        }
        out
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdConvention {
    /// Denominator `n - 1`.
    #[default]
    Sample,
    /// Denominator `n`.
    Population,
}

pub fn mean<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    // Shifted by the first value so that identical inputs give an exact mean.
    let x0 = values[0];
    x0 + values.iter().map(|&v| v - x0).sum::<T>() / T::of_i64(values.len() as i64)
}

/// Standard deviation; zero when fewer values than the convention needs.
pub fn std_dev<T: Scalar>(values: &[T], convention: SdConvention) -> T {
    let n = values.len();
    let denom = match convention {
        SdConvention::Sample if n >= 2 => n - 1,
        SdConvention::Population if n >= 1 => n,
        _ => return T::zero(),
    };
    let m = mean(values);
    let ss: T = values.iter().map(|&v| (v - m) * (v - m)).sum();
    (ss / T::of_i64(denom as i64)).sqrt()
}

pub fn median<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in statistics input"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::of(2.0)
    }
}

/// Mean absolute deviation from the median.
pub fn mad_from_median<T: Scalar>(values: &[T]) -> T {
    let med = median(values);
    let dev: Vec<T> = values.iter().map(|&v| (v - med).abs()).collect();
    mean(&dev)
}

/// Mean with SD, median with mean absolute deviation from the median.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dispersion<T> {
    pub mean: T,
    pub sd: T,
    pub median: T,
    pub mad: T,
}

impl<T: Scalar> Dispersion<T> {
    pub fn of(values: &[T], convention: SdConvention) -> Self {
        Self { mean: mean(values), sd: std_dev(values, convention), median: median(values), mad: mad_from_median(values) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthlyReturn<T> {
    pub month: YearMonth,
    pub balance_start: T,
    pub balance_end: T,
    pub return_fraction: T,
    pub risk_free: T,
}

impl<T: Scalar> MonthlyReturn<T> {
    pub fn excess(&self) -> T {
        self.return_fraction - self.risk_free
    }
}

/// Return of every month from the balance at the end of the previous month to the
/// balance at the end of this one. Months without trades return zero.
pub fn monthly_returns<T: Scalar>(equity: &[(i64, T)], initial_balance: T, months: &[YearMonth]) -> Vec<MonthlyReturn<T>> {
    let mut balance = initial_balance;
    let mut next = 0;
    months
        .iter()
        .map(|&month| {
            let start = balance;
            while next < equity.len() && YearMonth::of_time(equity[next].0) <= month {
                balance = equity[next].1;
                next += 1;
            }
            MonthlyReturn {
                month,
                balance_start: start,
                balance_end: balance,
                return_fraction: balance / start - T::one(),
                risk_free: T::zero(),
            }
        })
        .collect()
}

/// Attaches monthly risk-free rates to a return table.
pub fn with_risk_free<T: Scalar>(returns: &mut [MonthlyReturn<T>], rf: &BTreeMap<YearMonth, T>) -> Result<(), MetricsError> {
    for r in returns.iter_mut() {
        r.risk_free = *rf.get(&r.month).ok_or(MetricsError::MissingData(r.month))?;
    }
    Ok(())
}

/// Monthly risk-free fraction: average annual percent yield of the month, divided by 12.
pub fn risk_free_monthly<T: Scalar>(
    yields: &[(NaiveDate, T)],
    months: &[YearMonth],
) -> Result<BTreeMap<YearMonth, T>, MetricsError> {
    let mut by_month: BTreeMap<YearMonth, Vec<T>> = BTreeMap::new();
    for &(d, y) in yields {
        by_month.entry(YearMonth::of_date(d)).or_default().push(y);
    }
    months
        .iter()
        .map(|m| {
            let ys = by_month.get(m).ok_or(MetricsError::MissingData(*m))?;
            Ok((*m, mean(ys) / T::of(1200.0)))
        })
        .collect()
}

/// Parses `date,annual_percent` CSV. Rows whose yield is not a number (e.g. `.` for
/// a market holiday) are skipped.
pub fn parse_risk_free_csv<T: Scalar, R: Read>(reader: R) -> Result<Vec<(NaiveDate, T)>, MetricsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| MetricsError::Format(e.to_string()))?;
        if rec.len() < 2 {
            return Err(MetricsError::Format(format!("short row {:?}", rec)));
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| MetricsError::Format(format!("{}: {e}", &rec[0])))?;
        if let Ok(y) = rec[1].parse::<T>() {
            out.push((date, y));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpeRatio<T> {
    pub monthly: T,
    pub yearly: T,
}

pub fn sharpe_from_excess<T: Scalar>(excess: &[T], convention: SdConvention) -> Result<SharpeRatio<T>, MetricsError> {
    if excess.len() < 2 {
        return Err(MetricsError::TooFewMonths(excess.len()));
    }
    let sd = std_dev(excess, convention);
    let scale = excess.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    if !(sd > T::epsilon() * T::of(16.0) * scale) {
        return Err(MetricsError::DegenerateVariance);
    }
    let monthly = mean(excess) / sd;
    Ok(SharpeRatio { monthly, yearly: T::of(12.0).sqrt() * monthly })
}

/// Mean monthly excess return over its standard deviation, annualized by `sqrt(12)`.
pub fn sharpe<T: Scalar>(returns: &[MonthlyReturn<T>], convention: SdConvention) -> Result<SharpeRatio<T>, MetricsError> {
    let excess: Vec<T> = returns.iter().map(MonthlyReturn::excess).collect();
    sharpe_from_excess(&excess, convention)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeStats<T> {
    pub n_trades: usize,
    pub n_days: usize,
    /// Percentage of trades with strictly positive profit; 0 when there are no trades.
    pub win_rate: T,
    pub win_rate_defined: bool,
    pub duration: Dispersion<T>,
    pub profit_per_share: Dispersion<T>,
    pub trades_per_day: Dispersion<T>,
}

/// Trade characteristics. `days` is the trading calendar; days without trades count
/// as zero in the trades-per-day statistics.
pub fn trade_stats<T: Scalar>(ledger: &[TradeRecord<T>], days: &[NaiveDate], convention: SdConvention) -> TradeStats<T> {
    let n = ledger.len();
    let wins = ledger.iter().filter(|t| t.profit > T::zero()).count();
    let win_rate = if n == 0 { T::zero() } else { T::of(100.0) * T::of_i64(wins as i64) / T::of_i64(n as i64) };
    let durations: Vec<T> = ledger.iter().map(|t| T::of_i64(t.duration)).collect();
    let pps: Vec<T> = ledger.iter().map(|t| t.profit_per_share).collect();
    let mut per_day: BTreeMap<NaiveDate, i64> = days.iter().map(|&d| (d, 0)).collect();
    for t in ledger {
        if let Some(c) = per_day.get_mut(&date_of(t.entry_time)) {
            *c += 1;
        }
    }
    let per_day: Vec<T> = per_day.values().map(|&c| T::of_i64(c)).collect();
    TradeStats {
        n_trades: n,
        n_days: days.len(),
        win_rate,
        win_rate_defined: n > 0,
        duration: Dispersion::of(&durations, convention),
        profit_per_share: Dispersion::of(&pps, convention),
        trades_per_day: Dispersion::of(&per_day, convention),
    }
}

/// Number of trades per calendar day of the trading calendar, in date order.
pub fn trades_per_day<T: Scalar>(ledger: &[TradeRecord<T>], days: &[NaiveDate]) -> Vec<(NaiveDate, usize)> {
    let mut per_day: BTreeMap<NaiveDate, usize> = days.iter().map(|&d| (d, 0)).collect();
    for t in ledger {
        if let Some(c) = per_day.get_mut(&date_of(t.entry_time)) {
            *c += 1;
        }
    }
    per_day.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourBucket<T> {
    pub hour: u32,
    pub count: usize,
    pub mean_profit_per_share: T,
}

/// Trade count and mean per-share profit keyed by entry hour.
pub fn hourly_profile<T: Scalar>(ledger: &[TradeRecord<T>]) -> Vec<HourBucket<T>> {
    let mut buckets: BTreeMap<u32, Vec<T>> = BTreeMap::new();
    for t in ledger {
        buckets.entry(hour_of(t.entry_time)).or_default().push(t.profit_per_share);
    }
    buckets
        .into_iter()
        .map(|(hour, v)| HourBucket { hour, count: v.len(), mean_profit_per_share: mean(&v) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin<T> {
    pub lo: T,
    pub hi: T,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]`; the last bin is closed on the right.
pub fn histogram<T: Scalar>(values: &[T], n_bins: usize) -> Vec<HistogramBin<T>> {
    if values.is_empty() || n_bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(T::infinity(), T::min);
    let hi = values.iter().copied().fold(T::neg_infinity(), T::max);
    if lo == hi {
        return vec![HistogramBin { lo, hi, count: values.len() }];
    }
    let width = (hi - lo) / T::of_i64(n_bins as i64);
    let mut bins: Vec<HistogramBin<T>> = (0..n_bins)
        .map(|i| HistogramBin {
            lo: lo + width * T::of_i64(i as i64),
            hi: if i + 1 == n_bins { hi } else { lo + width * T::of_i64(i as i64 + 1) },
            count: 0,
        })
        .collect();
    for &v in values {
        let idx = ((v - lo) / width).floor().to_usize().unwrap_or(0).min(n_bins - 1);
        bins[idx].count += 1;
    }
    bins
}
