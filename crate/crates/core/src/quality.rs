//! Continuous true-quality distributions over a bounded support.
//!
//! These model the hidden quality values of the files in a test. All kinds
//! have exact first and second moments. Density-bearing kinds can be
//! evaluated pointwise and sampled; the moments-only kind exists because the
//! model-based bounds need nothing beyond a mean and a variance, and it
//! fails loudly if a density or samples are requested.

use crate::quad::{GaussLegendre, DEFAULT_NODES};
use rand::Rng;
use rand_distr::{Distribution as _, Gamma};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QualityError {
    #[error("support low end {lo} must be strictly below high end {hi}")]
    InvalidSupport { lo: f64, hi: f64 },
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("mean {mean} is outside the support [{lo}, {hi}]")]
    MeanOutOfSupport { mean: f64, lo: f64, hi: f64 },
    #[error("variance {variance} is infeasible on [{lo}, {hi}] with mean {mean}")]
    InfeasibleVariance {
        mean: f64,
        variance: f64,
        lo: f64,
        hi: f64,
    },
    #[error("a moments-only distribution has no density")]
    NoDensity,
    #[error("a moments-only distribution cannot be sampled")]
    Unsampleable,
    #[error("cannot parse distribution spec {0:?}")]
    BadSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Uniform,
    /// Beta(alpha, beta) stretched onto the support.
    ScaledBeta {
        alpha: f64,
        beta: f64,
    },
    Triangular {
        mode: f64,
    },
    PointMass {
        value: f64,
    },
    /// Mean and variance only; no shape information.
    Moments {
        mean: f64,
        variance: f64,
    },
}

/// A true-quality distribution on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityDistribution {
    lo: f64,
    hi: f64,
    kind: Kind,
}

impl QualityDistribution {
    fn with_support(lo: f64, hi: f64, kind: Kind) -> Result<Self, QualityError> {
        if !(lo < hi) {
            return Err(QualityError::InvalidSupport { lo, hi });
        }
        Ok(QualityDistribution { lo, hi, kind })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, QualityError> {
        Self::with_support(lo, hi, Kind::Uniform)
    }

    pub fn scaled_beta(lo: f64, hi: f64, alpha: f64, beta: f64) -> Result<Self, QualityError> {
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(QualityError::InvalidParameter(format!(
                "beta shape parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Self::with_support(lo, hi, Kind::ScaledBeta { alpha, beta })
    }

    pub fn triangular(lo: f64, hi: f64, mode: f64) -> Result<Self, QualityError> {
        if !(mode >= lo && mode <= hi) {
            return Err(QualityError::InvalidParameter(format!(
                "triangular mode {mode} must lie in [{lo}, {hi}]"
            )));
        }
        Self::with_support(lo, hi, Kind::Triangular { mode })
    }

    pub fn point_mass(lo: f64, hi: f64, value: f64) -> Result<Self, QualityError> {
        if !(value >= lo && value <= hi) {
            return Err(QualityError::InvalidParameter(format!(
                "point mass {value} must lie in [{lo}, {hi}]"
            )));
        }
        Self::with_support(lo, hi, Kind::PointMass { value })
    }

    /// Mean and variance only. Usable by moment-based bound formulas but not
    /// by anything that needs a density or samples.
    pub fn from_moments(lo: f64, hi: f64, mean: f64, variance: f64) -> Result<Self, QualityError> {
        if !(lo < hi) {
            return Err(QualityError::InvalidSupport { lo, hi });
        }
        if !(mean >= lo && mean <= hi) {
            return Err(QualityError::MeanOutOfSupport { mean, lo, hi });
        }
        let cap = (mean - lo) * (hi - mean);
        if !(variance >= 0.0) || variance > cap {
            return Err(QualityError::InfeasibleVariance {
                mean,
                variance,
                lo,
                hi,
            });
        }
        Self::with_support(lo, hi, Kind::Moments { mean, variance })
    }

    /// Parses a CLI-style spec: `uniform`, `beta:A:B`, `tri:MODE`, `point:Y`,
    /// or `moments:MU:VAR`, interpreted on `[lo, hi]`.
    pub fn parse_spec(spec: &str, lo: f64, hi: f64) -> Result<Self, QualityError> {
        let bad = || QualityError::BadSpec(spec.to_string());
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            ["uniform"] => Self::uniform(lo, hi),
            ["beta", a, b] => Self::scaled_beta(lo, hi, num(a)?, num(b)?),
            ["tri", m] => Self::triangular(lo, hi, num(m)?),
            ["point", y] => Self::point_mass(lo, hi, num(y)?),
            ["moments", mu, var] => Self::from_moments(lo, hi, num(mu)?, num(var)?),
            _ => Err(bad()),
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self.kind, Kind::PointMass { .. })
    }

    pub fn is_moments_only(&self) -> bool {
        matches!(self.kind, Kind::Moments { .. })
    }

    /// The location of a point mass, if this is one.
    pub fn point_mass_value(&self) -> Option<f64> {
        match self.kind {
            Kind::PointMass { value } => Some(value),
            _ => None,
        }
    }

    /// Beta shape parameters, if this is a scaled beta.
    pub fn beta_shape(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::ScaledBeta { alpha, beta } => Some((alpha, beta)),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        let (lo, hi) = (self.lo, self.hi);
        match self.kind {
            Kind::Uniform => 0.5 * (lo + hi),
            Kind::ScaledBeta { alpha, beta } => lo + (hi - lo) * alpha / (alpha + beta),
            Kind::Triangular { mode } => (lo + hi + mode) / 3.0,
            Kind::PointMass { value } => value,
            Kind::Moments { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        let span = self.hi - self.lo;
        match self.kind {
            Kind::Uniform => span * span / 12.0,
            Kind::ScaledBeta { alpha, beta } => {
                let s = alpha + beta;
                span * span * alpha * beta / (s * s * (s + 1.0))
            }
            Kind::Triangular { mode } => {
                let (a, b, c) = (self.lo, self.hi, mode);
                (a * a + b * b + c * c - a * b - a * c - b * c) / 18.0
            }
            Kind::PointMass { .. } => 0.0,
            Kind::Moments { variance, .. } => variance,
        }
    }

    /// Density at `y`. Zero outside the support.
    pub fn pdf(&self, y: f64) -> Result<f64, QualityError> {
        let (lo, hi) = (self.lo, self.hi);
        let span = hi - lo;
        if y < lo || y > hi {
            return match self.kind {
                Kind::PointMass { .. } | Kind::Moments { .. } => Err(QualityError::NoDensity),
                _ => Ok(0.0),
            };
        }
        match self.kind {
            Kind::Uniform => Ok(1.0 / span),
            Kind::ScaledBeta { alpha, beta } => {
                let u = (y - lo) / span;
                let ln_b = ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta);
                // Skip zero-exponent terms so unit shape parameters do not
                // produce 0 * ln(0) at the support endpoints.
                let mut ln_pdf = -ln_b;
                if alpha != 1.0 {
                    ln_pdf += (alpha - 1.0) * u.ln();
                }
                if beta != 1.0 {
                    ln_pdf += (beta - 1.0) * (1.0 - u).ln();
                }
                Ok(ln_pdf.exp() / span)
            }
            Kind::Triangular { mode } => {
                let c = mode;
                if y < c {
                    Ok(2.0 * (y - lo) / (span * (c - lo)))
                } else if y > c {
                    Ok(2.0 * (hi - y) / (span * (hi - c)))
                } else {
                    // At the mode; one-sided modes still peak at 2 / span.
                    Ok(2.0 / span)
                }
            }
            Kind::PointMass { .. } | Kind::Moments { .. } => Err(QualityError::NoDensity),
        }
    }

    /// Interior points where the density has a kink. Quadrature over the
    /// density splits the interval here.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            Kind::Triangular { mode } if mode > self.lo && mode < self.hi => vec![mode],
            _ => Vec::new(),
        }
    }

    /// Integrates `f(y) * pdf(y)` over the support.
    pub fn integrate_against<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<f64, QualityError> {
        if let Kind::PointMass { value } = self.kind {
            return Ok(f(value));
        }
        let rule = GaussLegendre::new(DEFAULT_NODES);
        let breaks = self.breakpoints();
        Ok(rule.integrate_split(self.lo, self.hi, &breaks, |y| {
            f(y) * self.pdf(y).expect("density-bearing kind")
        }))
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, QualityError> {
        let (lo, hi) = (self.lo, self.hi);
        let span = hi - lo;
        match self.kind {
            Kind::Uniform => Ok(lo + span * rng.random::<f64>()),
            Kind::ScaledBeta { alpha, beta } => {
                // Two-gamma construction: X/(X+Y) with X~Gamma(a), Y~Gamma(b).
                let ga = Gamma::new(alpha, 1.0)
                    .map_err(|e| QualityError::InvalidParameter(e.to_string()))?;
                let gb = Gamma::new(beta, 1.0)
                    .map_err(|e| QualityError::InvalidParameter(e.to_string()))?;
                let x = ga.sample(rng);
                let y = gb.sample(rng);
                Ok(lo + span * x / (x + y))
            }
            Kind::Triangular { mode } => {
                // Inverse CDF, branching at the mode.
                let u = rng.random::<f64>();
                let fc = (mode - lo) / span;
                if u < fc {
                    Ok(lo + (u * span * (mode - lo)).sqrt())
                } else {
                    Ok(hi - ((1.0 - u) * span * (hi - mode)).sqrt())
                }
            }
            Kind::PointMass { value } => Ok(value),
            Kind::Moments { .. } => Err(QualityError::Unsampleable),
        }
    }

    /// Draws `n` i.i.d. values.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>, QualityError> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }
}
