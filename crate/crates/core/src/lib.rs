//! Tube oscillator backtesting.
//!
//! The oscillator counts how many lines of a fixed grid of sloped support and
//! resistance lines the price crosses each second, averages those counts over a
//! sliding window and over a sign-symmetric set of slopes, and flips the sign so that
//! rising prices give positive values. A threshold state machine trades on it with
//! spread-aware accounting.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! it to `f64`, which is what the backtest driver uses.

pub mod backtest;
pub mod geometry;
pub mod metrics;
pub mod params;
pub mod price_series;
pub mod scalar;
pub mod timebase;
pub mod trading;

pub use backtest::{run_backtest, BacktestConfig, BacktestError, BacktestReport};
pub use geometry::{sign_convention, single_line_crossing, GeometryError, Line, LineGrid, OscillatorOutput, OscillatorState};
pub use metrics::{MetricsError, MonthlyReturn, SdConvention, SharpeRatio, TradeStats, YearMonth};
pub use params::{HeuristicConfig, HeuristicError, OscillatorParams};
pub use price_series::{PriceSeriesError, PriceSource, SecondSeries, TickFormat, TickRecord};
pub use scalar::Scalar;
pub use timebase::{PeriodSpec, PeriodSummary, TimebaseError, ZoneInterval};
pub use trading::{
    EngineConfig, ExecutionDelay, ExitReason, Side, Thresholds, TradeRecord, TradingEngine, TradingError, VolumeMode,
};

pub type Price = f64;
pub type Grid = LineGrid<f64>;
pub type Oscillator = OscillatorState<f64>;
pub type Engine = TradingEngine<f64>;
pub type Trade = TradeRecord<f64>;
pub type Tick = TickRecord<f64>;
pub type Series = SecondSeries<f64>;
pub type Summary = PeriodSummary<f64>;
pub type Params = OscillatorParams<f64>;
