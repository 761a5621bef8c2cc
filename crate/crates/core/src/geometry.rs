//! Line grids, crossing detection and the tube oscillator.
//!
//! A grid holds `N_s` uniformly spaced starting prices anchored at the zone start
//! and `2 N_f` slopes generated as `±m_basic * f_k`. For every slope the oscillator
//! counts, each second, how many lines the price crossed (downward crossings of the
//! price through a line count `-1`, upward `+1` after inversion), averages those counts
//! over the last `bandwidth` seconds and then over all slopes.
//!
//! Counts are kept as integers in a ring buffer; division happens only at read-out,
//! so the incrementally maintained window is exactly equal to a fresh recomputation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("starting points are not uniformly spaced (offset {index} deviates by {deviation})")]
    NonUniformGrid { index: usize, deviation: f64 },
    #[error("bandwidth must be at least one second")]
    InvalidBandwidth,
    #[error("discount factor must lie in (0, 1], got {0}")]
    InvalidDiscount(f64),
    #[error("updates must be sequential: expected t = {expected}, got {got}")]
    Sequence { expected: i64, got: i64 },
}

/// `+1` for `x >= 0`, `-1` otherwise. A price exactly on a line is not above it.
#[inline]
pub fn sign_convention<T: Scalar>(x: T) -> i32 {
    if x >= T::zero() {
        1
    } else {
        -1
    }
}

/// Straight line through `(anchor_time, anchor_price)` with `slope` price units per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line<T> {
    pub anchor_time: i64,
    pub anchor_price: T,
    pub slope: T,
}

impl<T: Scalar> Line<T> {
    #[inline]
    pub fn value_at(&self, t: i64) -> T {
        self.anchor_price + self.slope * T::of_i64(t - self.anchor_time)
    }
}

/// Crossing of one line between seconds `t - 1` and `t`:
/// `+1` when the price went from above the line to below it, `-1` for the
/// opposite direction, `0` otherwise.
pub fn single_line_crossing<T: Scalar>(line: &Line<T>, t: i64, s_prev: T, s_now: T) -> i32 {
    (sign_convention(line.value_at(t) - s_now) - sign_convention(line.value_at(t - 1) - s_prev)) / 2
}

/// Uniform grid of starting points crossed with a sign-symmetric slope set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGrid<T> {
    anchor_time: i64,
    first_point: T,
    grid_step: T,
    n_points: usize,
    /// Interleaved `[+m_basic f_1, -m_basic f_1, +m_basic f_2, ...]`.
    slopes: Vec<T>,
}

impl<T: Scalar> LineGrid<T> {
    /// Grid `first_point + j * grid_step`, `j = 0..n_points`, with slopes `±m_basic * f_k`.
    pub fn uniform(
        anchor_time: i64,
        first_point: T,
        grid_step: T,
        n_points: usize,
        m_basic: T,
        slope_factors: &[T],
    ) -> Result<Self, GeometryError> {
        if n_points == 0 {
            return Err(GeometryError::InvalidGrid("no starting points".into()));
        }
        if !(grid_step > T::zero()) || !grid_step.is_finite() || !first_point.is_finite() {
            return Err(GeometryError::InvalidGrid(format!("grid step {grid_step} must be positive and finite")));
        }
        if !(m_basic > T::zero()) || !m_basic.is_finite() {
            return Err(GeometryError::InvalidGrid(format!("basic slope {m_basic} must be positive")));
        }
        if slope_factors.is_empty() {
            return Err(GeometryError::InvalidGrid("no slope factors".into()));
        }
        if let Some(f) = slope_factors.iter().find(|f| !(**f > T::zero()) || !f.is_finite()) {
            return Err(GeometryError::InvalidGrid(format!("slope factor {f} must be positive")));
        }
        let slopes = slope_factors.iter().flat_map(|&f| [m_basic * f, -(m_basic * f)]).collect();
        Ok(Self { anchor_time, first_point, grid_step, n_points, slopes })
    }

    /// Builds a grid from an explicit list of starting points, which must be strictly
    /// increasing with a constant spacing (up to a few ulps). The stored points are
    /// re-expressed as `s_1 + j * step`.
    pub fn from_points(
        anchor_time: i64,
        starting_points: &[T],
        m_basic: T,
        slope_factors: &[T],
    ) -> Result<Self, GeometryError> {
        let n = starting_points.len();
        if n < 2 {
            return Err(GeometryError::InvalidGrid("need at least two starting points".into()));
        }
        let first = starting_points[0];
        let last = starting_points[n - 1];
        let step = (last - first) / T::of_i64(n as i64 - 1);
        if !(step > T::zero()) {
            return Err(GeometryError::InvalidGrid("starting points must be strictly increasing".into()));
        }
        let scale = first.abs().max(last.abs()).max(step);
        let tol = T::epsilon() * T::of(8.0) * scale;
        for (j, &s) in starting_points.iter().enumerate() {
            let deviation = (s - (first + step * T::of_i64(j as i64))).abs();
            if deviation > tol {
                return Err(GeometryError::NonUniformGrid { index: j, deviation: deviation.to_f64_lossy() });
            }
        }
        Self::uniform(anchor_time, first, step, n, m_basic, slope_factors)
    }

    pub fn anchor_time(&self) -> i64 {
        self.anchor_time
    }

    pub fn grid_step(&self) -> T {
        self.grid_step
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn slopes(&self) -> &[T] {
        &self.slopes
    }

    pub fn n_slopes(&self) -> usize {
        self.slopes.len()
    }

    /// Starting point with zero-based index `j`.
    #[inline]
    pub fn starting_point(&self, j: usize) -> T {
        self.first_point + self.grid_step * T::of_i64(j as i64)
    }

    pub fn starting_points(&self) -> Vec<T> {
        (0..self.n_points).map(|j| self.starting_point(j)).collect()
    }

    pub fn line(&self, slope_index: usize, j: usize) -> Line<T> {
        Line { anchor_time: self.anchor_time, anchor_price: self.starting_point(j), slope: self.slopes[slope_index] }
    }

    /// Same grid re-anchored at a new zone start.
    pub fn reanchored(&self, anchor_time: i64) -> Self {
        Self { anchor_time, ..self.clone() }
    }

    /// Number of lines of slope `k` lying strictly below `price` at time `t`.
    ///
    /// Line values are nondecreasing in the starting-point index, so the count is the
    /// first index whose line is at or above the price. The floor estimate is corrected
    /// against the exact per-line comparison, which makes the result identical to a
    /// line-by-line scan.
    pub fn lines_below(&self, slope_index: usize, t: i64, price: T) -> usize {
        let offset = self.slopes[slope_index] * T::of_i64(t - self.anchor_time);
        let value = |j: usize| self.starting_point(j) + offset;
        let n = self.n_points;
        let x = (price - offset - self.first_point) / self.grid_step;
        let mut j = if !(x > T::zero()) {
            0
        } else if x >= T::of_i64(n as i64) {
            n
        } else {
            x.ceil().to_usize().unwrap_or(n).min(n)
        };
        while j > 0 && value(j - 1) >= price {
            j -= 1;
        }
        while j < n && value(j) < price {
            j += 1;
        }
        j
    }

    /// Net crossings of all lines with slope `k` between `t - 1` and `t`.
    pub fn slope_crossing_count(&self, slope_index: usize, t: i64, s_prev: T, s_now: T) -> i64 {
        self.lines_below(slope_index, t - 1, s_prev) as i64 - self.lines_below(slope_index, t, s_now) as i64
    }
}

/// Oscillator value before and after the presentational multiplicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorOutput<T> {
    pub raw: T,
    pub scaled: T,
    pub multiplicator: T,
}

/// Streaming tube oscillator over one period.
#[derive(Debug, Clone)]
pub struct OscillatorState<T> {
    grid: LineGrid<T>,
    bandwidth: usize,
    discount: Option<T>,
    discount_weights: Vec<T>,
    // slot-major: ring[slot * n_slopes + k]
    ring: Vec<i64>,
    head: usize,
    sums: Vec<i64>,
    last: Vec<i64>,
    current_time: i64,
}

impl<T: Scalar> OscillatorState<T> {
    /// Fresh state for the period anchored at `grid.anchor_time()`. The first accepted
    /// update is at the anchor second; everything before contributes zero crossings.
    pub fn new(grid: LineGrid<T>, bandwidth: usize, discount: Option<T>) -> Result<Self, GeometryError> {
        if bandwidth == 0 {
            return Err(GeometryError::InvalidBandwidth);
        }
        let discount = match discount {
            Some(g) if !(g > T::zero() && g <= T::one()) => return Err(GeometryError::InvalidDiscount(g.to_f64_lossy())),
            Some(g) if g == T::one() => None,
            other => other,
        };
        let discount_weights = match discount {
            Some(g) => (0..bandwidth).scan(T::one(), |w, _| {
                let cur = *w;
                *w *= g;
                Some(cur)
            })
            .collect(),
            None => Vec::new(),
        };
        let k = grid.n_slopes();
        Ok(Self {
            current_time: grid.anchor_time() - 1,
            grid,
            bandwidth,
            discount,
            discount_weights,
            ring: vec![0; k * bandwidth],
            head: 0,
            sums: vec![0; k],
            last: vec![0; k],
        })
    }

    /// Re-initializes for a new period: zeroed buffers, new anchor.
    pub fn reset(&mut self, grid: LineGrid<T>) {
        let k = grid.n_slopes();
        self.current_time = grid.anchor_time() - 1;
        self.grid = grid;
        self.ring.clear();
        self.ring.resize(k * self.bandwidth, 0);
        self.sums = vec![0; k];
        self.last = vec![0; k];
        self.head = 0;
    }

    pub fn grid(&self) -> &LineGrid<T> {
        &self.grid
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn discount(&self) -> Option<T> {
        self.discount
    }

    pub fn current_time(&self) -> i64 {
        self.current_time
    }

    /// Crossing counts pushed by the most recent update, one per slope.
    pub fn last_counts(&self) -> &[i64] {
        &self.last
    }

    /// Integer sum of the last `bandwidth` crossing counts, one per slope.
    pub fn window_sums(&self) -> &[i64] {
        &self.sums
    }

    /// Windowed average crossing information of slope `k`.
    pub fn window_average(&self, k: usize) -> T {
        match self.discount {
            None => T::of_i64(self.sums[k]) / T::of_i64(self.bandwidth as i64),
            Some(_) => self.discounted_sum(k) / T::of_i64(self.bandwidth as i64),
        }
    }

    fn discounted_sum(&self, k: usize) -> T {
        let n = self.grid.n_slopes();
        (0..self.bandwidth)
            .map(|age| {
                let slot = (self.head + self.bandwidth - 1 - age) % self.bandwidth;
                self.discount_weights[age] * T::of_i64(self.ring[slot * n + k])
            })
            .sum()
    }

    fn check_time(&self, t: i64) -> Result<(), GeometryError> {
        if t != self.current_time + 1 {
            return Err(GeometryError::Sequence { expected: self.current_time + 1, got: t });
        }
        Ok(())
    }

    fn push(&mut self, t: i64, counts: impl Iterator<Item = i64>) {
        let n = self.grid.n_slopes();
        let base = self.head * n;
        for (k, d) in counts.enumerate() {
            let old = std::mem::replace(&mut self.ring[base + k], d);
            self.sums[k] += d - old;
            self.last[k] = d;
        }
        self.head = (self.head + 1) % self.bandwidth;
        self.current_time = t;
        debug_assert!((0..n).all(|k| {
            let s: i64 = (0..self.bandwidth).map(|slot| self.ring[slot * n + k]).sum();
            s == self.sums[k]
        }));
    }

    /// Advances to second `t` with the prices at `t - 1` and `t`.
    pub fn update(&mut self, t: i64, s_prev: T, s_now: T, multiplicator: T) -> Result<OscillatorOutput<T>, GeometryError> {
        self.check_time(t)?;
        let grid = &self.grid;
        let counts: Vec<i64> = (0..grid.n_slopes()).map(|k| grid.slope_crossing_count(k, t, s_prev, s_now)).collect();
        self.push(t, counts.into_iter());
        Ok(self.output(multiplicator))
    }

    /// Advances to second `t` without crossing information (no price available, or the
    /// first second of the period).
    pub fn update_idle(&mut self, t: i64, multiplicator: T) -> Result<OscillatorOutput<T>, GeometryError> {
        self.check_time(t)?;
        let n = self.grid.n_slopes();
        self.push(t, std::iter::repeat_n(0, n));
        Ok(self.output(multiplicator))
    }

    /// Negated average over slopes of the windowed crossing information.
    pub fn raw(&self) -> T {
        let n = self.grid.n_slopes();
        match self.discount {
            None => {
                let total: i64 = self.sums.iter().sum();
                T::of_i64(-total) / T::of_i64((n * self.bandwidth) as i64)
            }
            Some(_) => {
                let total: T = (0..n).map(|k| self.window_average(k)).sum();
                -total / T::of_i64(n as i64)
            }
        }
    }

    pub fn output(&self, multiplicator: T) -> OscillatorOutput<T> {
        let raw = self.raw();
        OscillatorOutput { raw, scaled: multiplicator * raw, multiplicator }
    }
}
