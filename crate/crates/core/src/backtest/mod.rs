//! End-to-end backtest: per-day oscillator and trading loops, balance compounding
//! across days and the aggregate report.
//!
//! Days are independent once their parameters are known, so loading, resampling and
//! the per-day loops run in parallel. Each day trades with a unit balance; the
//! resulting per-share ledger is re-sized sequentially in day order, which keeps the
//! output independent of the number of threads.

mod config;
mod output;

use std::path::PathBuf;

use chrono::NaiveDate;
use log::warn;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use config::{parse_clock, parse_threshold_pair, BacktestConfig, ConfigFile, Overrides};
pub use output::{downsample_indices, emit_plot_data, write_outputs, DaySelection, PlotDataError, TRADES_HEADER};

use crate::geometry::{GeometryError, LineGrid, OscillatorState};
use crate::metrics::{
    self, Dispersion, HourBucket, MonthlyReturn, TradeStats, YearMonth,
};
use crate::params::{HeuristicError, OscillatorParams};
use crate::price_series::{self, Manifest, PriceSeriesError, SecondSeries};
use crate::timebase::{self, PeriodSummary};
use crate::trading::{rescale_ledger, AccountState, SignalEvent, TradeRecord, TradingEngine, TradingError};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(#[from] PriceSeriesError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Heuristic(#[from] HeuristicError),
    #[error("on {date}: {source}")]
    Trading {
        date: NaiveDate,
        #[source]
        source: TradingError,
    },
    #[error(transparent)]
    Output(#[from] PlotDataError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DayStatus {
    Warmup,
    Traded,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayAudit {
    pub date: NaiveDate,
    pub status: DayStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub skipped_rows: usize,
    pub n_trades: usize,
    pub profit: f64,
    pub degenerate_slope: bool,
    pub degenerate_range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Audit {
    pub calendar_days: usize,
    pub trading_days: usize,
    pub warmup_days: usize,
    pub skipped_days: usize,
    pub days: Vec<DayAudit>,
}

/// Full per-second record of one traded day, kept only when tracing is enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct DayTrace {
    pub date: NaiveDate,
    pub series: SecondSeries<f64>,
    pub prices: Vec<Option<f64>>,
    pub raw: Vec<f64>,
    pub scaled: Vec<f64>,
    pub signals: Vec<SignalEvent<f64>>,
    pub grid: LineGrid<f64>,
    pub params: OscillatorParams<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub config: BacktestConfig,
    pub sr_monthly: Option<f64>,
    pub sr_yearly: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sharpe_error: Option<String>,
    pub monthly_return: Dispersion<f64>,
    pub initial_balance: f64,
    pub final_balance: f64,
    pub total_profit: f64,
    pub return_on_investment: f64,
    pub trade_stats: TradeStats<f64>,
    pub monthly_returns: Vec<MonthlyReturn<f64>>,
    pub hourly_profile: Vec<HourBucket<f64>>,
    pub audit: Audit,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub ledger: Vec<TradeRecord<f64>>,
    #[serde(skip)]
    pub equity: Vec<(i64, f64)>,
    #[serde(skip)]
    pub traces: Vec<DayTrace>,
}

impl BacktestReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Dates on which trading took place (warm-up and skipped days excluded).
    pub fn trading_days(&self) -> Vec<NaiveDate> {
        self.audit.days.iter().filter(|d| d.status == DayStatus::Traded).map(|d| d.date).collect()
    }
}

enum Loaded {
    Day { series: SecondSeries<f64>, summary: PeriodSummary<f64>, skipped_rows: usize },
    Skipped { reason: String, skipped_rows: usize },
}

fn load_day(cfg: &BacktestConfig, manifest: &Manifest, date: NaiveDate) -> Loaded {
    let Some(path) = manifest.get(date) else {
        return Loaded::Skipped { reason: "no data file listed".into(), skipped_rows: 0 };
    };
    let parsed = match price_series::load_ticks::<f64>(path, &cfg.tick_format) {
        Ok(p) => p,
        Err(e) => {
            let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
            let reason = match &e {
                PriceSeriesError::Io { source, .. } => format!("data missing: cannot read {name} ({})", source.kind()),
                other => format!("data missing: {name}: {other}"),
            };
            return Loaded::Skipped { reason, skipped_rows: 0 };
        }
    };
    let zone = cfg.period(date).zone_interval();
    let skipped_rows = parsed.skipped;
    if !price_series::has_tick_in_zone(&parsed.ticks, zone) {
        return Loaded::Skipped { reason: "no ticks inside the zone".into(), skipped_rows };
    }
    let series = match price_series::resample_to_seconds(&parsed.ticks, zone) {
        Ok(s) => s,
        Err(e) => return Loaded::Skipped { reason: e.to_string(), skipped_rows },
    };
    match timebase::summarize_period(&series, cfg.price_source) {
        Ok(summary) => Loaded::Day { series, summary, skipped_rows },
        Err(e) => Loaded::Skipped { reason: e.to_string(), skipped_rows },
    }
}

struct DayJob {
    date: NaiveDate,
    series: SecondSeries<f64>,
    params: OscillatorParams<f64>,
}

struct DayRun {
    ledger: Vec<TradeRecord<f64>>,
    trace: Option<DayTrace>,
}

/// Runs oscillator and trading engine over one zone with a unit balance.
fn run_day(cfg: &BacktestConfig, job: DayJob) -> Result<DayRun, BacktestError> {
    let DayJob { date, series, params } = job;
    let zone = cfg.period(date).zone_interval();
    let grid = params.grid(zone.start)?;
    let mut osc = OscillatorState::new(grid.clone(), params.bandwidth, params.discount)?;
    let mut engine = TradingEngine::new(cfg.engine_config(), 1.0).map_err(|source| BacktestError::Trading { date, source })?;
    let mult = params.multiplicator;
    let n = series.len();
    let mut ledger = Vec::new();
    let (mut raw, mut scaled, mut prices) = if cfg.trace {
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n))
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    let trading_err = |source| BacktestError::Trading { date, source };
    let mut prev: Option<f64> = None;
    for i in 0..n {
        let t = series.time_at(i);
        let now = series.price(i, cfg.price_source);
        let out = match (i, prev, now) {
            (1.., Some(p), Some(s)) => osc.update(t, p, s, mult)?,
            _ => osc.update_idle(t, mult)?,
        };
        if let Some((ask, bid)) = series.quote(i) {
            if i + 1 == n {
                engine.set_entries_enabled(false);
            }
            ledger.extend(engine.step(t, out.scaled, ask, bid).map_err(trading_err)?);
        }
        if cfg.trace {
            raw.push(out.raw);
            scaled.push(out.scaled);
            prices.push(now);
        }
        prev = now;
    }
    let (ask, bid) = series.quote(n - 1).expect("zone contains a tick, so the last second has a quote");
    ledger.extend(engine.force_close_at_period_end(zone.end, ask, bid).map_err(trading_err)?);
    let trace = cfg.trace.then(|| DayTrace {
        date,
        prices,
        raw,
        scaled,
        signals: engine.take_signals(),
        grid,
        params,
        series,
    });
    Ok(DayRun { ledger, trace })
}

/// Runs the configured backtest. Days without usable data are skipped and listed in
/// the audit; configuration problems abort.
pub fn run_backtest(cfg: &BacktestConfig) -> Result<BacktestReport, BacktestError> {
    let manifest = Manifest::load(&cfg.resolve_path(&cfg.manifest))?;
    let calendar = cfg.calendar();
    let mut warnings = Vec::new();

    let loaded: Vec<Loaded> = calendar.par_iter().map(|&d| load_day(cfg, &manifest, d)).collect();

    let mut audit: Vec<DayAudit> = Vec::with_capacity(calendar.len());
    let mut jobs = Vec::new();
    let mut previous: Option<PeriodSummary<f64>> = None;
    let mut seen = 0usize;
    for (&date, day) in calendar.iter().zip(loaded) {
        let mut entry = DayAudit {
            date,
            status: DayStatus::Skipped,
            reason: None,
            skipped_rows: 0,
            n_trades: 0,
            profit: 0.0,
            degenerate_slope: false,
            degenerate_range: false,
        };
        match day {
            Loaded::Skipped { reason, skipped_rows } => {
                if reason.starts_with("data missing") {
                    warn!("{date}: {reason}");
                    warnings.push(format!("{date}: {reason}"));
                }
                entry.reason = Some(reason);
                entry.skipped_rows = skipped_rows;
            }
            Loaded::Day { series, summary, skipped_rows } => {
                entry.skipped_rows = skipped_rows;
                seen += 1;
                match previous.replace(summary) {
                    Some(prev) if seen > cfg.warmup_days => {
                        let first = series.first_present().expect("series has a tick");
                        let s_first = series.price(first, cfg.price_source).expect("present");
                        let derived = cfg.heuristics.derive(&prev, cfg.zone_length, s_first)?;
                        entry.status = DayStatus::Traded;
                        entry.degenerate_slope = derived.degenerate_slope;
                        entry.degenerate_range = derived.degenerate_range;
                        if derived.degenerate_slope || derived.degenerate_range {
                            warnings.push(format!("{date}: previous period had a flat range; fallback parameters used"));
                        }
                        jobs.push(DayJob { date, series, params: derived.params });
                    }
                    _ => entry.status = DayStatus::Warmup,
                }
            }
        }
        audit.push(entry);
    }

    let runs: Vec<(NaiveDate, DayRun)> = jobs
        .into_par_iter()
        .map(|job| {
            let date = job.date;
            run_day(cfg, job).map(|r| (date, r))
        })
        .collect::<Result<_, _>>()?;

    let mut account = AccountState::new(cfg.start_balance);
    let mut ledger = Vec::new();
    let mut traces = Vec::new();
    for (date, run) in runs {
        let before = account.balance;
        let day_ledger = rescale_ledger(&run.ledger, cfg.volume, &mut account);
        let entry = audit.iter_mut().find(|a| a.date == date).expect("audited");
        entry.n_trades = day_ledger.len();
        entry.profit = account.balance - before;
        ledger.extend(day_ledger);
        traces.extend(run.trace);
    }

    let months = YearMonth::range(cfg.from, cfg.to);
    let mut monthly = metrics::monthly_returns(&account.equity, cfg.start_balance, &months);
    match &cfg.rf_file {
        Some(p) => {
            let path = cfg.resolve_path(p);
            let file = std::fs::File::open(&path).map_err(|source| BacktestError::Io { path: path.clone(), source })?;
            let yields = metrics::parse_risk_free_csv::<f64, _>(file).map_err(|e| BacktestError::Config(e.to_string()))?;
            for r in monthly.iter_mut() {
                match metrics::risk_free_monthly(&yields, &[r.month]) {
                    Ok(rf) => r.risk_free = rf[&r.month],
                    Err(e) => warnings.push(format!("{e}; risk-free rate set to 0")),
                }
            }
        }
        None => warnings.push("no risk-free file; risk-free rate set to 0".into()),
    }
    let (sr_monthly, sr_yearly, sharpe_error) = match metrics::sharpe(&monthly, cfg.sd_convention) {
        Ok(sr) => (Some(sr.monthly), Some(sr.yearly), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    let returns: Vec<f64> = monthly.iter().map(|m| m.return_fraction).collect();

    let trading_days: Vec<NaiveDate> = audit.iter().filter(|a| a.status == DayStatus::Traded).map(|a| a.date).collect();
    let count = |s: DayStatus| audit.iter().filter(|a| a.status == s).count();
    let audit = Audit {
        calendar_days: calendar.len(),
        trading_days: count(DayStatus::Traded),
        warmup_days: count(DayStatus::Warmup),
        skipped_days: count(DayStatus::Skipped),
        days: audit,
    };

    Ok(BacktestReport {
        config: cfg.clone(),
        sr_monthly,
        sr_yearly,
        sharpe_error,
        monthly_return: Dispersion::of(&returns, cfg.sd_convention),
        initial_balance: cfg.start_balance,
        final_balance: account.balance,
        total_profit: account.balance - cfg.start_balance,
        return_on_investment: (account.balance - cfg.start_balance) / cfg.start_balance,
        trade_stats: metrics::trade_stats(&ledger, &trading_days, cfg.sd_convention),
        monthly_returns: monthly,
        hourly_profile: metrics::hourly_profile(&ledger),
        audit,
        warnings,
        ledger,
        equity: account.equity,
        traces,
    })
}
