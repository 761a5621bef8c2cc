use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/golden")
}

fn backtest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tube-backtest")).args(args).env("RUST_LOG", "error").output().unwrap()
}

#[test]
fn golden_run_writes_the_frozen_ledger() {
    let out = tempfile::tempdir().unwrap();
    let cfg = golden().join("golden.cfg");
    let o = backtest(&["--config", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap(), "--trace"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let frozen = std::fs::read(golden().join("expected/trades.csv")).unwrap();
    assert_eq!(std::fs::read(out.path().join("trades.csv")).unwrap(), frozen);
    for f in ["report.json", "monthly_returns.csv", "plotdata/hourly_profile.csv", "plotdata/2024-01-04/grid.csv"] {
        assert!(out.path().join(f).is_file(), "{f}");
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("trades = 4"));
}

#[test]
fn flags_override_the_file() {
    let out = tempfile::tempdir().unwrap();
    let cfg = golden().join("golden.cfg");
    let o = backtest(&[
        "--config", cfg.to_str().unwrap(),
        "--out", out.path().to_str().unwrap(),
        "--thresholds", "5/4",
        "--delay", "1",
        "--bandwidth", "60",
        "--multiplicator", "10",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report = std::fs::read_to_string(out.path().join("report.json")).unwrap();
    assert!(report.contains("\"in_long\": 5.0") && report.contains("\"delay\": \"one_second\""));
    assert!(report.contains("\"bandwidth\": 60"));
    assert!(report.contains("\"n_trades\": 0"));
}

#[test]
fn exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let out = out.path().to_str().unwrap();
    let cfg = golden().join("golden.cfg");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(backtest(&["--config", "/does/not/exist.cfg"]).status.code(), Some(2));
    assert_eq!(backtest(&["--config", cfg, "--out", out, "--thresholds", "0.1/0.4"]).status.code(), Some(2));
    assert_eq!(backtest(&["--config", cfg, "--out", out, "--delay", "3"]).status.code(), Some(2));
    // only the day without a data file is in range
    assert_eq!(backtest(&["--config", cfg, "--out", out, "--from", "2024-01-05", "--to", "2024-01-05"]).status.code(), Some(3));
}
