//! Linearly spaced frequency sweeps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("start frequency must be finite and > 0, got {0}")]
    InvalidStart(f64),
    #[error("stop frequency {stop} must be finite and greater than start {start}")]
    InvalidStop { start: f64, stop: f64 },
    #[error("a sweep needs at least 2 points, got {0}")]
    TooFewPoints(usize),
}

/// Frequency stamps of one VNA sweep: `points` stamps from `start_hz` to
/// `stop_hz`, both inclusive, exactly linearly spaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct FrequencyGrid {
    start_hz: f64,
    stop_hz: f64,
    points: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    start_hz: f64,
    stop_hz: f64,
    points: usize,
}

impl TryFrom<RawGrid> for FrequencyGrid {
    type Error = GridError;

    fn try_from(raw: RawGrid) -> Result<Self, Self::Error> {
        FrequencyGrid::new(raw.start_hz, raw.stop_hz, raw.points)
    }
}

impl From<FrequencyGrid> for RawGrid {
    fn from(g: FrequencyGrid) -> Self {
        RawGrid {
            start_hz: g.start_hz,
            stop_hz: g.stop_hz,
            points: g.points,
        }
    }
}

impl FrequencyGrid {
    pub fn new(start_hz: f64, stop_hz: f64, points: usize) -> Result<Self, GridError> {
        if !(start_hz.is_finite() && start_hz > 0.0) {
            return Err(GridError::InvalidStart(start_hz));
        }
        if !(stop_hz.is_finite() && stop_hz > start_hz) {
            return Err(GridError::InvalidStop {
                start: start_hz,
                stop: stop_hz,
            });
        }
        if points < 2 {
            return Err(GridError::TooFewPoints(points));
        }
        Ok(Self {
            start_hz,
            stop_hz,
            points,
        })
    }

    pub fn start_hz(&self) -> f64 {
        self.start_hz
    }

    pub fn stop_hz(&self) -> f64 {
        self.stop_hz
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn span_hz(&self) -> f64 {
        self.stop_hz - self.start_hz
    }

    /// Spacing between adjacent stamps.
    pub fn step_hz(&self) -> f64 {
        self.span_hz() / (self.points - 1) as f64
    }

    /// Frequency of stamp `i`. The last stamp is exactly `stop_hz`.
    pub fn stamp(&self, i: usize) -> f64 {
        assert!(i < self.points, "stamp index {i} out of range");
        if i == self.points - 1 {
            self.stop_hz
        } else {
            self.start_hz + self.span_hz() * (i as f64) / ((self.points - 1) as f64)
        }
    }

    pub fn stamps(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.points).map(|i| self.stamp(i))
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.start_hz && f <= self.stop_hz
    }

    /// Index of the stamp closest to `f`, clamped to the grid.
    pub fn nearest_index(&self, f: f64) -> usize {
        let pos = (f - self.start_hz) / self.step_hz();
        pos.round().clamp(0.0, (self.points - 1) as f64) as usize
    }

    /// Index range `[lo, hi)` of stamps falling inside `[f_lo, f_hi]`.
    pub fn index_range(&self, f_lo: f64, f_hi: f64) -> std::ops::Range<usize> {
        let step = self.step_hz();
        let lo = ((f_lo - self.start_hz) / step).ceil().max(0.0);
        let hi = ((f_hi - self.start_hz) / step).floor().min((self.points - 1) as f64);
        if hi < lo {
            return 0..0;
        }
        lo as usize..hi as usize + 1
    }

    /// Exact textual identity of the grid, used to check that templates and
    /// traces were taken on the same sweep.
    pub fn fingerprint(&self) -> String {
        format!("lin:{:?}:{:?}:{}", self.start_hz, self.stop_hz, self.points)
    }
}
