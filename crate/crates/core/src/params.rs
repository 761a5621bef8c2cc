//! Rules of thumb that derive oscillator parameters from the previous period.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, LineGrid};
use crate::scalar::Scalar;
use crate::timebase::PeriodSummary;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeuristicError {
    #[error("degenerate price range: previous period has max == min")]
    DegenerateRange,
    #[error("{0}")]
    Range(String),
    #[error("invalid oscillator parameters: {0}")]
    InvalidParams(String),
}

/// `(max - min) / zone_length` of the previous period.
pub fn basic_slope_from_previous<T: Scalar>(summary: &PeriodSummary<T>, zone_length: i64) -> Result<T, HeuristicError> {
    if zone_length <= 0 {
        return Err(HeuristicError::Range(format!("zone length {zone_length} must be positive")));
    }
    let range = summary.range();
    if range < T::zero() {
        return Err(HeuristicError::Range("previous max below previous min".into()));
    }
    if range == T::zero() {
        return Err(HeuristicError::DegenerateRange);
    }
    Ok(range / T::of_i64(zone_length))
}

/// `f_k = tan(pi/2 * k/10)` for `k = 1..=n_f`; the family has a pole at `k = 10`.
pub fn default_slope_factors<T: Scalar>(n_f: usize) -> Result<Vec<T>, HeuristicError> {
    if n_f == 0 || n_f >= 10 {
        return Err(HeuristicError::Range(format!("tangent slope family needs 1 <= N_f <= 9, got {n_f}")));
    }
    let ten = T::of(10.0);
    Ok((1..=n_f)
        .map(|k| (T::FRAC_PI_2() * T::of_i64(k as i64) / ten).tan())
        .collect())
}

/// `N_s` points `S_first - w*dS + (j/N_s) * 2w*dS`, `j = 1..=N_s`, with half-width factor
/// `w` (2 by default). Computed as `start + j * step` so the spacing is exactly uniform.
pub fn starting_points_with_width<T: Scalar>(
    s_first: T,
    delta_s: T,
    n_s: usize,
    width_factor: T,
) -> Result<Vec<T>, HeuristicError> {
    if n_s < 2 {
        return Err(HeuristicError::Range(format!("need N_s >= 2, got {n_s}")));
    }
    if delta_s == T::zero() {
        return Err(HeuristicError::DegenerateRange);
    }
    if !(delta_s > T::zero()) || !(width_factor > T::zero()) {
        return Err(HeuristicError::Range("range and width factor must be positive".into()));
    }
    let half = width_factor * delta_s;
    let start = s_first - half;
    let step = (half + half) / T::of_i64(n_s as i64);
    Ok((1..=n_s).map(|j| start + step * T::of_i64(j as i64)).collect())
}

pub fn default_starting_points<T: Scalar>(s_first: T, delta_s: T, n_s: usize) -> Result<Vec<T>, HeuristicError> {
    starting_points_with_width(s_first, delta_s, n_s, T::of(2.0))
}

/// Everything needed to build a grid and run the oscillator for one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams<T> {
    pub m_basic: T,
    pub slope_factors: Vec<T>,
    pub starting_points: Vec<T>,
    pub bandwidth: usize,
    pub multiplicator: T,
    pub discount: Option<T>,
}

impl<T: Scalar> OscillatorParams<T> {
    pub fn validate(&self) -> Result<(), HeuristicError> {
        let bad = |m: &str| Err(HeuristicError::InvalidParams(m.into()));
        if self.slope_factors.is_empty() || self.slope_factors.iter().any(|f| !(*f > T::zero())) {
            return bad("slope factors must be non-empty and positive");
        }
        if self.bandwidth < 1 {
            return bad("bandwidth must be >= 1");
        }
        if !(self.multiplicator > T::zero()) {
            return bad("multiplicator must be positive");
        }
        if !(self.m_basic > T::zero()) {
            return bad("basic slope must be positive");
        }
        if let Some(g) = self.discount {
            if !(g > T::zero() && g <= T::one()) {
                return bad("discount must lie in (0, 1]");
            }
        }
        Ok(())
    }

    pub fn n_slopes(&self) -> usize {
        2 * self.slope_factors.len()
    }

    pub fn grid(&self, anchor_time: i64) -> Result<LineGrid<T>, GeometryError> {
        LineGrid::from_points(anchor_time, &self.starting_points, self.m_basic, &self.slope_factors)
    }
}

/// Switches and fallbacks for deriving [`OscillatorParams`] from a previous period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig<T> {
    /// Fixed basic slope; derived from the previous range when absent.
    pub m_basic: Option<T>,
    /// Fixed slope factors; the tangent family with `n_f` members when absent.
    pub slope_factors: Option<Vec<T>>,
    pub n_f: usize,
    pub n_s: usize,
    /// Half-width of the grid in multiples of the previous range.
    pub grid_width_factor: T,
    /// Basic slope used when the previous period was flat.
    pub fallback_slope: T,
    /// Range used for the grid when the previous period was flat.
    pub fallback_range: T,
    pub bandwidth: usize,
    pub multiplicator: T,
    pub discount: Option<T>,
}

impl<T: Scalar> Default for HeuristicConfig<T> {
    fn default() -> Self {
        Self {
            m_basic: None,
            slope_factors: None,
            n_f: 9,
            n_s: 300,
            grid_width_factor: T::of(2.0),
            fallback_slope: T::of(1e-6),
            fallback_range: T::of(0.01),
            bandwidth: 300,
            multiplicator: T::of(20.0),
            discount: None,
        }
    }
}

/// Outcome of applying the heuristics, with the fallbacks that had to be used.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParams<T> {
    pub params: OscillatorParams<T>,
    pub degenerate_slope: bool,
    pub degenerate_range: bool,
}

impl<T: Scalar> HeuristicConfig<T> {
    /// Parameters for a period whose first price is `s_first`, using the previous period's summary.
    pub fn derive(&self, previous: &PeriodSummary<T>, zone_length: i64, s_first: T) -> Result<DerivedParams<T>, HeuristicError> {
        let (m_basic, degenerate_slope) = match self.m_basic {
            Some(m) => (m, false),
            None => match basic_slope_from_previous(previous, zone_length) {
                Ok(m) => (m, false),
                Err(HeuristicError::DegenerateRange) => (self.fallback_slope, true),
                Err(e) => return Err(e),
            },
        };
        let slope_factors = match &self.slope_factors {
            Some(f) => f.clone(),
            None => default_slope_factors(self.n_f)?,
        };
        let (starting_points, degenerate_range) =
            match starting_points_with_width(s_first, previous.range(), self.n_s, self.grid_width_factor) {
                Ok(p) => (p, false),
                Err(HeuristicError::DegenerateRange) => (
                    starting_points_with_width(s_first, self.fallback_range, self.n_s, self.grid_width_factor)?,
                    true,
                ),
                Err(e) => return Err(e),
            };
        let params = OscillatorParams {
            m_basic,
            slope_factors,
            starting_points,
            bandwidth: self.bandwidth,
            multiplicator: self.multiplicator,
            discount: self.discount,
        };
        params.validate()?;
        Ok(DerivedParams { params, degenerate_slope, degenerate_range })
    }
}
