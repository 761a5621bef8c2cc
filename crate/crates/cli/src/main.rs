use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::{error, info, warn};
use tube_core::backtest::{self, parse_threshold_pair, BacktestConfig, BacktestError, Overrides};

#[derive(Debug, Parser)]
#[command(name = "tube-backtest", version, about = "Backtest the tube oscillator threshold strategy on tick data")]
struct Args {
    /// Run configuration (`key = value` lines, optional `[instrument]` sections).
    #[arg(long)]
    config: PathBuf,
    /// Instrument section to use; required when the file has more than one.
    #[arg(long)]
    instrument: Option<String>,
    /// First calendar day (YYYY-MM-DD).
    #[arg(long)]
    from: Option<chrono::NaiveDate>,
    /// Last calendar day (YYYY-MM-DD), inclusive.
    #[arg(long)]
    to: Option<chrono::NaiveDate>,
    /// Record per-second traces and write per-day plot data.
    #[arg(long)]
    trace: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seconds between a signal and its execution.
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=1))]
    delay: Option<u32>,
    /// Symmetric entry/exit levels, e.g. 0.4/0.1.
    #[arg(long, value_name = "IN/OUT", value_parser = thresholds)]
    thresholds: Option<(f64, f64)>,
    /// Oscillator window in seconds.
    #[arg(long, value_name = "SECONDS")]
    bandwidth: Option<usize>,
    #[arg(long, value_name = "X")]
    multiplicator: Option<f64>,
}

fn thresholds(s: &str) -> Result<(f64, f64), String> {
    parse_threshold_pair(s).map_err(|e| e.to_string())
}

fn exit_code(e: &BacktestError) -> u8 {
    match e {
        BacktestError::Config(_) | BacktestError::Heuristic(_) => 2,
        BacktestError::Data(_) => 3,
        _ => 1,
    }
}

fn run(args: Args) -> Result<u8, BacktestError> {
    let overrides = Overrides {
        from: args.from,
        to: args.to,
        trace: args.trace,
        output_dir: args.out,
        delay: args.delay,
        thresholds: args.thresholds,
        bandwidth: args.bandwidth,
        multiplicator: args.multiplicator,
    };
    let cfg = BacktestConfig::from_file(&args.config, args.instrument.as_deref(), &overrides)?;
    info!("{}: {} .. {}", cfg.instrument, cfg.from, cfg.to);
    let report = backtest::run_backtest(&cfg)?;
    backtest::write_outputs(&report, &cfg.output_dir)?;

    let a = &report.audit;
    info!(
        "{} trading, {} warm-up, {} skipped of {} days; {} trades; final balance {}",
        a.trading_days, a.warmup_days, a.skipped_days, a.calendar_days, report.trade_stats.n_trades, report.final_balance
    );
    match (report.sr_monthly, report.sr_yearly) {
        (Some(m), Some(y)) => println!("SR_monthly = {m:.4}  SR_yearly = {y:.4}"),
        _ => println!("Sharpe ratio undefined: {}", report.sharpe_error.as_deref().unwrap_or("")),
    }
    println!("total profit = {}  trades = {}", report.total_profit, report.trade_stats.n_trades);
    if a.trading_days == 0 && a.skipped_days > 0 {
        warn!("no day could be traded");
        return Ok(3);
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match run(args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
