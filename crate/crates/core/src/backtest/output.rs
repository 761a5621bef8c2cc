//! CSV and JSON files written after a run, including the per-day plot data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use super::{BacktestReport, DayTrace};
use crate::metrics::{self, HistogramBin};
use crate::trading::TradeRecord;

pub const TRADES_HEADER: &str =
    "entry_time,exit_time,side,entry_price,exit_price,size,profit,profit_per_share,duration,exit_reason";

#[derive(Debug, Error)]
pub enum PlotDataError {
    #[error("no oscillator trace for {0}; rerun with tracing enabled")]
    TraceUnavailable(NaiveDate),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which traced days get per-day plot files.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum DaySelection {
    /// Run-level tables only.
    #[default]
    None,
    All,
    Dates(Vec<NaiveDate>),
}

/// Indices of `points` evenly spread rows out of `n`, always keeping the first and last.
/// `points == 0` or `points >= n` keeps every row.
pub fn downsample_indices(n: usize, points: usize) -> Vec<usize> {
    if points == 0 || points >= n {
        return (0..n).collect();
    }
    if points == 1 {
        return vec![0];
    }
    (0..points).map(|k| k * (n - 1) / (points - 1)).collect()
}

fn write_file(path: &Path, text: &str) -> Result<(), PlotDataError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| PlotDataError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| PlotDataError::Io { path: path.to_path_buf(), source })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn trades_csv(ledger: &[TradeRecord<f64>]) -> String {
    let mut s = String::from(TRADES_HEADER);
    s.push('\n');
    for t in ledger {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            t.entry_time,
            t.exit_time,
            t.side.as_str(),
            t.entry_price,
            t.exit_price,
            t.size,
            t.profit,
            t.profit_per_share,
            t.duration,
            t.exit_reason.as_str()
        );
    }
    s
}

fn monthly_csv(report: &BacktestReport) -> String {
    let mut s = String::from("month,balance_start,balance_end,return,risk_free,excess\n");
    for m in &report.monthly_returns {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            m.month,
            m.balance_start,
            m.balance_end,
            m.return_fraction,
            m.risk_free,
            m.excess()
        );
    }
    s
}

fn histogram_csv(bins: &[HistogramBin<f64>]) -> String {
    let mut s = String::from("lo,hi,count,log10_count\n");
    for b in bins {
        let log = if b.count > 0 { (b.count as f64).log10().to_string() } else { String::new() };
        let _ = writeln!(s, "{},{},{},{}", b.lo, b.hi, b.count, log);
    }
    s
}

/// Writes `report.json`, `trades.csv` and `monthly_returns.csv`, then the plot data for
/// every traced day.
pub fn write_outputs(report: &BacktestReport, dir: &Path) -> Result<Vec<PathBuf>, PlotDataError> {
    let mut written = Vec::new();
    for (name, text) in [
        ("report.json", report.to_json()),
        ("trades.csv", trades_csv(&report.ledger)),
        ("monthly_returns.csv", monthly_csv(report)),
    ] {
        let path = dir.join(name);
        write_file(&path, &text)?;
        written.push(path);
    }
    let selection = if report.traces.is_empty() { DaySelection::None } else { DaySelection::All };
    written.extend(emit_plot_data(report, &selection, &dir.join("plotdata"))?);
    Ok(written)
}

fn day_files(report: &BacktestReport, trace: &DayTrace, dir: &Path) -> Result<Vec<PathBuf>, PlotDataError> {
    let dir = dir.join(trace.date.to_string());
    let keep = downsample_indices(trace.series.len(), report.config.trace_points);

    let mut price = String::from("t,ask,bid,price\n");
    let mut osc = String::from("t,raw,scaled\n");
    for &i in &keep {
        let t = trace.series.time_at(i);
        let (ask, bid) = trace.series.quote(i).unzip();
        let _ = writeln!(price, "{t},{},{},{}", opt(ask), opt(bid), opt(trace.prices[i]));
        let _ = writeln!(osc, "{t},{},{}", trace.raw[i], trace.scaled[i]);
    }

    let mut grid = String::from("anchor_time,anchor_price,slope\n");
    for j in 0..trace.grid.n_points() {
        for k in 0..trace.grid.n_slopes() {
            let l = trace.grid.line(k, j);
            let _ = writeln!(grid, "{},{},{}", l.anchor_time, l.anchor_price, l.slope);
        }
    }

    let mut signals = String::from("t,kind,scaled\n");
    for e in &trace.signals {
        let _ = writeln!(signals, "{},{},{}", e.time, e.kind.as_str(), e.oscillator);
    }

    let day: Vec<TradeRecord<f64>> = report
        .ledger
        .iter()
        .filter(|t| t.entry_time >= trace.series.t_start() && t.entry_time <= trace.series.t_end())
        .copied()
        .collect();

    let mut out = Vec::new();
    for (name, text) in [
        ("price.csv", price),
        ("grid.csv", grid),
        ("oscillator.csv", osc),
        ("signals.csv", signals),
        ("trades.csv", trades_csv(&day)),
    ] {
        let path = dir.join(name);
        write_file(&path, &text)?;
        out.push(path);
    }
    Ok(out)
}

/// Writes the run-level tables and, for the selected days, price, grid, oscillator,
/// signal and trade files under `<dir>/<date>/`.
pub fn emit_plot_data(report: &BacktestReport, selection: &DaySelection, dir: &Path) -> Result<Vec<PathBuf>, PlotDataError> {
    let bins = report.config.histogram_bins;
    let pps: Vec<f64> = report.ledger.iter().map(|t| t.profit_per_share).collect();
    let durations: Vec<f64> = report.ledger.iter().map(|t| t.duration as f64).collect();
    let per_day: Vec<f64> =
        metrics::trades_per_day(&report.ledger, &report.trading_days()).iter().map(|&(_, c)| c as f64).collect();
    let mut hourly = String::from("hour,count,mean_profit_per_share\n");
    for h in &report.hourly_profile {
        let _ = writeln!(hourly, "{},{},{}", h.hour, h.count, h.mean_profit_per_share);
    }

    let mut written = Vec::new();
    for (name, text) in [
        ("monthly_returns.csv", monthly_csv(report)),
        ("profit_per_share_hist.csv", histogram_csv(&metrics::histogram(&pps, bins))),
        ("duration_hist.csv", histogram_csv(&metrics::histogram(&durations, bins))),
        ("trades_per_day_hist.csv", histogram_csv(&metrics::histogram(&per_day, bins))),
        ("hourly_profile.csv", hourly),
    ] {
        let path = dir.join(name);
        write_file(&path, &text)?;
        written.push(path);
    }

    let traces: Vec<&DayTrace> = match selection {
        DaySelection::None => Vec::new(),
        DaySelection::All => report.traces.iter().collect(),
        DaySelection::Dates(dates) => dates
            .iter()
            .map(|d| report.traces.iter().find(|t| t.date == *d).ok_or(PlotDataError::TraceUnavailable(*d)))
            .collect::<Result<_, _>>()?,
    };
    for trace in traces {
        written.extend(day_files(report, trace, dir)?);
    }
    Ok(written)
}
