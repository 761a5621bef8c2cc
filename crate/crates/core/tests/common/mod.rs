#![allow(dead_code)]

use std::path::{Path, PathBuf};

use tube_core::backtest::{run_backtest, write_outputs, BacktestConfig, BacktestReport, Overrides};

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

pub fn golden_config(out: &Path, trace: bool) -> BacktestConfig {
    let ov = Overrides { output_dir: Some(out.to_path_buf()), trace, ..Default::default() };
    BacktestConfig::from_file(&golden_dir().join("golden.cfg"), None, &ov).expect("golden config loads")
}

pub fn run_golden(out: &Path, trace: bool) -> BacktestReport {
    let cfg = golden_config(out, trace);
    let report = run_backtest(&cfg).expect("golden run");
    write_outputs(&report, out).expect("outputs written");
    report
}

/// One row of the oracle ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrade {
    pub entry_time: i64,
    pub exit_time: i64,
    pub side: String,
    pub entry_price: f64,
    pub exit_price: f64,
    pub size: f64,
    pub profit: f64,
    pub profit_per_share: f64,
    pub duration: i64,
    pub exit_reason: String,
}

pub fn oracle_ledger() -> Vec<OracleTrade> {
    let text = std::fs::read_to_string(golden_dir().join("expected_ledger.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            OracleTrade {
                entry_time: f[0].parse().unwrap(),
                exit_time: f[1].parse().unwrap(),
                side: f[2].to_string(),
                entry_price: f[3].parse().unwrap(),
                exit_price: f[4].parse().unwrap(),
                size: f[5].parse().unwrap(),
                profit: f[6].parse().unwrap(),
                profit_per_share: f[7].parse().unwrap(),
                duration: f[8].parse().unwrap(),
                exit_reason: f[9].to_string(),
            }
        })
        .collect()
}

/// Differences between the engine ledger and the oracle ledger; empty when they agree.
pub fn ledger_mismatches(report: &BacktestReport, oracle: &[OracleTrade]) -> Vec<String> {
    let mut out = Vec::new();
    if report.ledger.len() != oracle.len() {
        out.push(format!("{} trades, oracle has {}", report.ledger.len(), oracle.len()));
    }
    for (i, (t, o)) in report.ledger.iter().zip(oracle).enumerate() {
        let same = t.entry_time == o.entry_time
            && t.exit_time == o.exit_time
            && t.side.as_str() == o.side
            && t.exit_reason.as_str() == o.exit_reason
            && t.duration == o.duration
            && t.entry_price == o.entry_price
            && t.exit_price == o.exit_price
            && t.size == o.size
            && t.profit == o.profit
            && t.profit_per_share == o.profit_per_share;
        if !same {
            out.push(format!("trade {i}: engine {t:?} vs oracle {o:?}"));
        }
    }
    out
}

/// Compares `actual` with the frozen file, or rewrites it when `UPDATE_GOLDEN` is set.
pub fn matches_frozen(name: &str, actual: &str) -> bool {
    let path = golden_dir().join("expected").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return true;
    }
    std::fs::read_to_string(&path).map(|s| s == actual).unwrap_or(false)
}
