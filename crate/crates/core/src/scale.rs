//! Rating scales and the MOS lattices they induce.
//!
//! A rating scale is a set of `n_s` equally spaced discrete levels spanning
//! `[s_lo, s_hi]`. Averaging `n_v` votes from such a scale can only produce
//! values on a finer lattice with `n_v * (n_s - 1) + 1` points; that lattice
//! is what limits how closely a MOS can approach an arbitrary true quality.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScaleError {
    #[error("scale low end {lo} must be strictly below high end {hi}")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("a rating scale needs at least 2 levels, got {0}")]
    InvalidLevels(usize),
    #[error("a MOS lattice needs at least 1 vote per file, got {0}")]
    InvalidVotes(usize),
    #[error("value {value} is outside the scale range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
}

/// A discrete rating scale: `n_levels` equally spaced values on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatingScale {
    lo: f64,
    hi: f64,
    n_levels: usize,
}

impl RatingScale {
    pub fn new(lo: f64, hi: f64, n_levels: usize) -> Result<Self, ScaleError> {
        if !(lo < hi) {
            return Err(ScaleError::InvalidBounds { lo, hi });
        }
        if n_levels < 2 {
            return Err(ScaleError::InvalidLevels(n_levels));
        }
        Ok(RatingScale { lo, hi, n_levels })
    }

    /// The common five-level scale on [1, 5].
    pub fn mos_1_to_5() -> Self {
        RatingScale::new(1.0, 5.0, 5).unwrap()
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    /// Spacing between adjacent levels.
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n_levels - 1) as f64
    }

    /// The `k`-th level. Endpoints are exact by construction.
    pub fn level(&self, k: usize) -> f64 {
        debug_assert!(k < self.n_levels);
        if k == self.n_levels - 1 {
            self.hi
        } else {
            self.lo + k as f64 * self.step()
        }
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.n_levels).map(|k| self.level(k)).collect()
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lo && value <= self.hi
    }

    /// Whether `value` sits on a scale level, up to `1e-12 * span`.
    pub fn is_level(&self, value: f64) -> bool {
        if !self.contains(value) {
            return false;
        }
        let k = ((value - self.lo) / self.step()).round() as usize;
        let k = k.min(self.n_levels - 1);
        (value - self.level(k)).abs() <= 1e-12 * self.span()
    }

    pub fn check_in_range(&self, value: f64) -> Result<(), ScaleError> {
        if self.contains(value) {
            Ok(())
        } else {
            Err(ScaleError::OutOfRange {
                value,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

/// The set of values a MOS over `n_votes` ratings can take.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MosLattice {
    scale: RatingScale,
    n_votes: usize,
}

impl MosLattice {
    pub fn new(scale: RatingScale, n_votes: usize) -> Result<Self, ScaleError> {
        if n_votes < 1 {
            return Err(ScaleError::InvalidVotes(n_votes));
        }
        Ok(MosLattice { scale, n_votes })
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn n_votes(&self) -> usize {
        self.n_votes
    }

    /// Lattice resolution parameter: `n_votes * (n_levels - 1)`.
    pub fn resolution(&self) -> usize {
        self.n_votes * (self.scale.n_levels() - 1)
    }

    /// Number of lattice points, `resolution + 1`.
    pub fn len(&self) -> usize {
        self.resolution() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.scale.span() / self.resolution() as f64
    }

    /// The `k`-th lattice point. Endpoints are exact by construction.
    pub fn point(&self, k: usize) -> f64 {
        debug_assert!(k < self.len());
        if k == self.resolution() {
            self.scale.hi()
        } else {
            self.scale.lo() + k as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Index of the lattice point nearest to `value`.
    pub fn nearest_index(&self, value: f64) -> usize {
        let raw = ((value - self.scale.lo()) / self.step()).round();
        (raw.max(0.0) as usize).min(self.resolution())
    }

    /// Whether `value` sits on the lattice, up to `1e-12 * span`.
    pub fn contains_point(&self, value: f64) -> bool {
        if !self.scale.contains(value) {
            return false;
        }
        let k = self.nearest_index(value);
        (value - self.point(k)).abs() <= 1e-12 * self.scale.span()
    }

    /// Distance from `value` to the nearest lattice point.
    ///
    /// This is the smallest error a MOS over `n_votes` ratings can achieve
    /// against a file whose true quality is `value`.
    pub fn nearest_error(&self, value: f64) -> Result<f64, ScaleError> {
        self.scale.check_in_range(value)?;
        let k = self.nearest_index(value);
        let mut best = (value - self.point(k)).abs();
        // Guard against rounding at the index boundary.
        if k > 0 {
            best = best.min((value - self.point(k - 1)).abs());
        }
        if k < self.resolution() {
            best = best.min((value - self.point(k + 1)).abs());
        }
        Ok(best)
    }
}
