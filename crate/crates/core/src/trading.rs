//! Threshold trading on the scaled oscillator with spread-aware accounting.
//!
//! Longs are bought at the ask and sold at the bid; shorts are sold at the bid and
//! bought back at the ask, so every round trip pays one bid-ask spread. Within a
//! second, exit signals are processed before entry signals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TradingError {
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("invalid quote at t = {time}: ask {ask}, bid {bid}")]
    InvalidQuote { time: i64, ask: f64, bid: f64 },
    #[error("engine steps must move forward in time: {got} after {last}")]
    Sequence { last: i64, got: i64 },
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Long,
    Short,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Long => "long",
            Side::Short => "short",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    Signal,
    PeriodEnd,
}

impl ExitReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExitReason::Signal => "signal",
            ExitReason::PeriodEnd => "period_end",
        }
    }
}

/// Entry and exit levels, with `in_long > out_long > 0 > out_short > in_short`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds<T> {
    pub in_long: T,
    pub out_long: T,
    pub in_short: T,
    pub out_short: T,
}

impl<T: Scalar> Thresholds<T> {
    pub fn new(in_long: T, out_long: T, in_short: T, out_short: T) -> Result<Self, TradingError> {
        if !(in_long > out_long && out_long > T::zero()) {
            return Err(TradingError::InvalidThresholds(format!(
                "need in_long > out_long > 0, got {in_long} / {out_long}"
            )));
        }
        if !(in_short < out_short && out_short < T::zero()) {
            return Err(TradingError::InvalidThresholds(format!(
                "need in_short < out_short < 0, got {in_short} / {out_short}"
            )));
        }
        Ok(Self { in_long, out_long, in_short, out_short })
    }

    /// Short levels mirrored from the long ones.
    pub fn symmetric(in_long: T, out_long: T) -> Result<Self, TradingError> {
        Self::new(in_long, out_long, -in_long, -out_long)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMode<T> {
    /// Every trade invests the whole current balance.
    Reinvest,
    /// Every trade has the same number of shares.
    Fixed(T),
}

/// Delay between a signal and its execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionDelay {
    #[default]
    Immediate,
    OneSecond,
}

impl ExecutionDelay {
    pub fn from_seconds(s: u32) -> Option<Self> {
        match s {
            0 => Some(Self::Immediate),
            1 => Some(Self::OneSecond),
            _ => None,
        }
    }

    pub fn seconds(&self) -> i64 {
        match self {
            Self::Immediate => 0,
            Self::OneSecond => 1,
        }
    }
}

/// Execution second for a signal, or `None` if it would fall after the zone end.
pub fn apply_execution_delay(signal_time: i64, delay: ExecutionDelay, zone_end: i64) -> Option<i64> {
    let t = signal_time + delay.seconds();
    (t <= zone_end).then_some(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position<T> {
    pub side: Side,
    pub entry_time: i64,
    pub entry_price: T,
    pub size: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord<T> {
    pub side: Side,
    pub entry_time: i64,
    pub exit_time: i64,
    pub entry_price: T,
    pub exit_price: T,
    pub size: T,
    pub profit: T,
    pub profit_per_share: T,
    pub duration: i64,
    pub exit_reason: ExitReason,
}

/// Per-share result of a round trip; positive when the trade made money after the spread.
pub fn profit_per_share<T: Scalar>(side: Side, entry_price: T, exit_price: T) -> T {
    match side {
        Side::Long => exit_price - entry_price,
        Side::Short => entry_price - exit_price,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountState<T> {
    pub initial_balance: T,
    pub balance: T,
    /// `(exit time, balance after the trade)` for every closed trade.
    pub equity: Vec<(i64, T)>,
}

impl<T: Scalar> AccountState<T> {
    pub fn new(initial_balance: T) -> Self {
        Self { initial_balance, balance: initial_balance, equity: Vec::new() }
    }

    fn book(&mut self, trade: &TradeRecord<T>) {
        self.balance += trade.profit;
        self.equity.push((trade.exit_time, self.balance));
    }
}

fn position_size<T: Scalar>(volume: VolumeMode<T>, balance: T, price: T) -> T {
    match volume {
        VolumeMode::Reinvest => balance / price,
        VolumeMode::Fixed(v) => v,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    EnterLong,
    ExitLong,
    EnterShort,
    ExitShort,
}

impl SignalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignalKind::EnterLong => "enter_long",
            SignalKind::ExitLong => "exit_long",
            SignalKind::EnterShort => "enter_short",
            SignalKind::ExitShort => "exit_short",
        }
    }
}

/// A threshold crossing that triggered an order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalEvent<T> {
    pub time: i64,
    pub kind: SignalKind,
    pub oscillator: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig<T> {
    pub thresholds: Thresholds<T>,
    pub volume: VolumeMode<T>,
    pub delay: ExecutionDelay,
    /// Allow a new entry in the same second as an exit.
    pub same_second_reentry: bool,
}

impl<T: Scalar> EngineConfig<T> {
    pub fn new(thresholds: Thresholds<T>) -> Self {
        Self { thresholds, volume: VolumeMode::Reinvest, delay: ExecutionDelay::Immediate, same_second_reentry: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Order {
    Open(Side),
    Close,
}

/// Single-instrument state machine holding at most one position.
#[derive(Debug, Clone)]
pub struct TradingEngine<T> {
    config: EngineConfig<T>,
    account: AccountState<T>,
    // Position as seen by the signal logic: side and signal second.
    intended: Option<(Side, i64)>,
    position: Option<Position<T>>,
    pending: Vec<Order>,
    last_time: Option<i64>,
    signals: Vec<SignalEvent<T>>,
    dropped_orders: usize,
    entries_enabled: bool,
}

impl<T: Scalar> TradingEngine<T> {
    pub fn new(config: EngineConfig<T>, initial_balance: T) -> Result<Self, TradingError> {
        if let VolumeMode::Fixed(v) = config.volume {
            if !(v > T::zero()) {
                return Err(TradingError::InvalidVolume(format!("fixed volume {v} must be positive")));
            }
        }
        if !(initial_balance > T::zero()) {
            return Err(TradingError::InvalidVolume(format!("initial balance {initial_balance} must be positive")));
        }
        Ok(Self {
            config,
            account: AccountState::new(initial_balance),
            intended: None,
            position: None,
            pending: Vec::new(),
            last_time: None,
            signals: Vec::new(),
            dropped_orders: 0,
            entries_enabled: true,
        })
    }

    pub fn config(&self) -> &EngineConfig<T> {
        &self.config
    }

    pub fn account(&self) -> &AccountState<T> {
        &self.account
    }

    pub fn balance(&self) -> T {
        self.account.balance
    }

    pub fn position(&self) -> Option<&Position<T>> {
        self.position.as_ref()
    }

    pub fn dropped_orders(&self) -> usize {
        self.dropped_orders
    }

    /// Suppresses new entries until the next period end, e.g. on the last zone second.
    pub fn set_entries_enabled(&mut self, enabled: bool) {
        self.entries_enabled = enabled;
    }

    /// Drains the signal events recorded so far.
    pub fn take_signals(&mut self) -> Vec<SignalEvent<T>> {
        std::mem::take(&mut self.signals)
    }

    fn advance(&mut self, t: i64, strict: bool) -> Result<(), TradingError> {
        if let Some(last) = self.last_time {
            if t < last || (strict && t == last) {
                return Err(TradingError::Sequence { last, got: t });
            }
        }
        self.last_time = Some(t);
        Ok(())
    }

    fn execute(&mut self, order: Order, t: i64, ask: T, bid: T, reason: ExitReason) -> Result<Option<TradeRecord<T>>, TradingError> {
        if !(ask >= bid && bid > T::zero() && ask.is_finite()) {
            return Err(TradingError::InvalidQuote { time: t, ask: ask.to_f64_lossy(), bid: bid.to_f64_lossy() });
        }
        match order {
            Order::Open(side) => {
                debug_assert!(self.position.is_none(), "at most one open position");
                let entry_price = match side {
                    Side::Long => ask,
                    Side::Short => bid,
                };
                let size = position_size(self.config.volume, self.account.balance, entry_price);
                self.position = Some(Position { side, entry_time: t, entry_price, size });
                Ok(None)
            }
            Order::Close => {
                let Some(pos) = self.position.take() else { return Ok(None) };
                let exit_price = match pos.side {
                    Side::Long => bid,
                    Side::Short => ask,
                };
                let pps = profit_per_share(pos.side, pos.entry_price, exit_price);
                let trade = TradeRecord {
                    side: pos.side,
                    entry_time: pos.entry_time,
                    exit_time: t,
                    entry_price: pos.entry_price,
                    exit_price,
                    size: pos.size,
                    profit: pps * pos.size,
                    profit_per_share: pps,
                    duration: t - pos.entry_time,
                    exit_reason: reason,
                };
                self.account.book(&trade);
                Ok(Some(trade))
            }
        }
    }

    fn signal(&mut self, t: i64, kind: SignalKind, oscillator: T, order: Order, ask: T, bid: T) -> Result<Option<TradeRecord<T>>, TradingError> {
        self.signals.push(SignalEvent { time: t, kind, oscillator });
        match self.config.delay {
            ExecutionDelay::Immediate => self.execute(order, t, ask, bid, ExitReason::Signal),
            ExecutionDelay::OneSecond => {
                self.pending.push(order);
                Ok(None)
            }
        }
    }

    /// Processes second `t` with scaled oscillator value `oscillator` and the quotes of that second.
    pub fn step(&mut self, t: i64, oscillator: T, ask: T, bid: T) -> Result<Option<TradeRecord<T>>, TradingError> {
        self.advance(t, true)?;
        let mut closed = None;
        for order in std::mem::take(&mut self.pending) {
            if let Some(tr) = self.execute(order, t, ask, bid, ExitReason::Signal)? {
                closed = Some(tr);
            }
        }

        let th = self.config.thresholds;
        let mut exited_now = false;
        if let Some((side, since)) = self.intended {
            if since < t {
                let exit = match side {
                    Side::Long => (oscillator < th.out_long).then_some(SignalKind::ExitLong),
                    Side::Short => (oscillator > th.out_short).then_some(SignalKind::ExitShort),
                };
                if let Some(kind) = exit {
                    self.intended = None;
                    exited_now = true;
                    if let Some(tr) = self.signal(t, kind, oscillator, Order::Close, ask, bid)? {
                        closed = Some(tr);
                    }
                }
            }
        }

        if self.entries_enabled && self.intended.is_none() && (!exited_now || self.config.same_second_reentry) {
            let go_long = oscillator > th.in_long;
            let go_short = oscillator < th.in_short;
            debug_assert!(!(go_long && go_short));
            let entry = if go_long {
                Some((Side::Long, SignalKind::EnterLong))
            } else if go_short {
                Some((Side::Short, SignalKind::EnterShort))
            } else {
                None
            };
            if let Some((side, kind)) = entry {
                self.intended = Some((side, t));
                self.signal(t, kind, oscillator, Order::Open(side), ask, bid)?;
            }
        }
        Ok(closed)
    }

    /// Closes any open position with the quotes of the last zone second and drops
    /// orders that would execute after it.
    pub fn force_close_at_period_end(&mut self, t_end: i64, ask: T, bid: T) -> Result<Option<TradeRecord<T>>, TradingError> {
        self.advance(t_end, false)?;
        self.dropped_orders += self.pending.len();
        self.pending.clear();
        self.intended = None;
        self.entries_enabled = true;
        if self.position.is_none() {
            return Ok(None);
        }
        self.execute(Order::Close, t_end, ask, bid, ExitReason::PeriodEnd)
    }
}

/// Replays a ledger with a different starting balance or volume mode.
///
/// Per-share results do not depend on position size, so a ledger computed with any
/// balance can be re-sized trade by trade. The arithmetic matches the engine's, which
/// makes the result identical to running the engine with `initial_balance` directly.
pub fn rescale_ledger<T: Scalar>(
    ledger: &[TradeRecord<T>],
    volume: VolumeMode<T>,
    account: &mut AccountState<T>,
) -> Vec<TradeRecord<T>> {
    ledger
        .iter()
        .map(|tr| {
            let size = position_size(volume, account.balance, tr.entry_price);
            let trade = TradeRecord { size, profit: tr.profit_per_share * size, ..*tr };
            account.book(&trade);
            trade
        })
        .collect()
}
