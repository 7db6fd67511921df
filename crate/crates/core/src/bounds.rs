//! Closed-form agreement bounds.
//!
//! The best conceivable objective estimator is an oracle that reports the
//! true quality itself, so the agreement between true quality and MOS bounds
//! the agreement between MOS and any estimator. The expected MSE of that
//! oracle is `E[v_r(Y)] / n_v` (a lower bound for estimators), and the
//! population PCC is `sqrt(Var[Y] / (Var[Y] + E[v_r(Y)] / n_v))` (an upper
//! bound). Under the BinoVotes model both reduce to expressions in the mean
//! and variance of the true-quality distribution alone.

use crate::quality::QualityDistribution;
use crate::scale::RatingScale;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("votes per file must be positive, got {0}")]
    NonpositiveVotes(f64),
    #[error("MOS variance must be positive, got {0}")]
    DegenerateMos(f64),
    #[error("quality variance must be positive, got {0}")]
    DegenerateQuality(f64),
    #[error("vote noise {noise} meets or exceeds the MOS variance {signal}: the MOS spread is explainable by vote noise alone (ratio {ratio})")]
    NoiseExceedsSignal { noise: f64, signal: f64, ratio: f64 },
    #[error("moments (mean {mean}, variance {variance}) are infeasible on the scale (cap {cap})")]
    InfeasibleMoments { mean: f64, variance: f64, cap: f64 },
    #[error("inconsistent inputs: var_x {var_x} != var_y {var_y} + vote noise {noise}")]
    InconsistentVariances { var_x: f64, var_y: f64, noise: f64 },
}

/// Where the vote-variance figure used by a bound came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceSource {
    /// Per-file variance observed in the dataset itself.
    DataDriven,
    /// A fixed pooled value from other tests on the same scale.
    GlobalAverage,
    /// The BinoVotes model applied to the MOS sample.
    BinovotesModel,
}

impl std::fmt::Display for VarianceSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VarianceSource::DataDriven => write!(f, "data-driven"),
            VarianceSource::GlobalAverage => write!(f, "global-average"),
            VarianceSource::BinovotesModel => write!(f, "binovotes-model"),
        }
    }
}

/// The quantities a bound was computed from.
///
/// `n_votes` is real-valued because real datasets report fractional average
/// votes per file. When both variances are present they must be linked by
/// `var_x = var_y + expected_vote_variance / n_votes`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub n_votes: f64,
    pub expected_vote_variance: f64,
    pub var_y: Option<f64>,
    pub var_x: Option<f64>,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<(), BoundsError> {
        if !(self.n_votes > 0.0) {
            return Err(BoundsError::NonpositiveVotes(self.n_votes));
        }
        if let (Some(var_y), Some(var_x)) = (self.var_y, self.var_x) {
            let noise = self.expected_vote_variance / self.n_votes;
            if (var_x - (var_y + noise)).abs() > 1e-9 {
                return Err(BoundsError::InconsistentVariances {
                    var_x,
                    var_y,
                    noise,
                });
            }
        }
        Ok(())
    }
}

/// An MSE lower bound and PCC upper bound pair, with provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub mse_bound: f64,
    pub rmse_bound: f64,
    pub pcc_bound: f64,
    pub variance_source: VarianceSource,
    pub inputs: BoundInputs,
}

/// Expected MSE of the oracle estimator: `E[v_r(Y)] / n_v`.
pub fn mse_lower_bound(expected_vote_variance: f64, n_votes: f64) -> Result<f64, BoundsError> {
    if !(n_votes > 0.0) {
        return Err(BoundsError::NonpositiveVotes(n_votes));
    }
    Ok(expected_vote_variance / n_votes)
}

/// PCC upper bound from the MOS variance: `sqrt((var_x - E[v_r]/n_v) / var_x)`.
///
/// This is the form to use with subjective test results, where only the MOS
/// distribution is observable.
pub fn pcc_upper_bound_from_mosvar(
    var_x: f64,
    expected_vote_variance: f64,
    n_votes: f64,
) -> Result<f64, BoundsError> {
    if !(n_votes > 0.0) {
        return Err(BoundsError::NonpositiveVotes(n_votes));
    }
    if !(var_x > 0.0) {
        return Err(BoundsError::DegenerateMos(var_x));
    }
    let noise = expected_vote_variance / n_votes;
    if noise >= var_x {
        return Err(BoundsError::NoiseExceedsSignal {
            noise,
            signal: var_x,
            ratio: noise / var_x,
        });
    }
    Ok(((var_x - noise) / var_x).sqrt())
}

/// PCC upper bound from the quality variance: `sqrt(var_y / (var_y + E[v_r]/n_v))`.
///
/// This is the form to use with assumed true-quality distributions.
pub fn pcc_upper_bound_from_qualityvar(
    var_y: f64,
    expected_vote_variance: f64,
    n_votes: f64,
) -> Result<f64, BoundsError> {
    if !(n_votes > 0.0) {
        return Err(BoundsError::NonpositiveVotes(n_votes));
    }
    if !(var_y > 0.0) {
        return Err(BoundsError::DegenerateQuality(var_y));
    }
    if expected_vote_variance < 0.0 {
        return Err(BoundsError::InfeasibleMoments {
            mean: f64::NAN,
            variance: expected_vote_variance,
            cap: 0.0,
        });
    }
    Ok((var_y / (var_y + expected_vote_variance / n_votes)).sqrt())
}

/// Bounds under the BinoVotes model for true quality with moments
/// (`mu_y`, `var_y`) rated `n_votes` times per file.
///
/// MSE = `((mu - s_lo)(s_hi - mu) - var_y) / n_m` and
/// PCC = `sqrt(n_m var_y / ((n_m - 1) var_y + (mu - s_lo)(s_hi - mu)))` with
/// `n_m = n_votes (n_s - 1)`. `n_votes` may be fractional: the moment-only
/// formulas stay meaningful for dataset-average vote counts even though no
/// lattice exists then.
pub fn binovotes_bounds(
    scale: RatingScale,
    mu_y: f64,
    var_y: f64,
    n_votes: f64,
) -> Result<BoundReport, BoundsError> {
    if !(n_votes > 0.0) {
        return Err(BoundsError::NonpositiveVotes(n_votes));
    }
    let cap = (mu_y - scale.lo()) * (scale.hi() - mu_y);
    if !(mu_y >= scale.lo() && mu_y <= scale.hi()) || !(var_y >= 0.0) || var_y > cap {
        return Err(BoundsError::InfeasibleMoments {
            mean: mu_y,
            variance: var_y,
            cap,
        });
    }
    if var_y == 0.0 {
        return Err(BoundsError::DegenerateQuality(var_y));
    }
    let n_m = n_votes * (scale.n_levels() - 1) as f64;
    let mse = (cap - var_y) / n_m;
    let pcc = (n_m * var_y / ((n_m - 1.0) * var_y + cap)).sqrt();
    let expected_vote_variance = (cap - var_y) / (scale.n_levels() - 1) as f64;
    Ok(BoundReport {
        mse_bound: mse,
        rmse_bound: mse.sqrt(),
        pcc_bound: pcc,
        variance_source: VarianceSource::BinovotesModel,
        inputs: BoundInputs {
            n_votes,
            expected_vote_variance,
            var_y: Some(var_y),
            var_x: Some(var_y + mse),
        },
    })
}

/// One row of a bound-versus-votes sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCurveRow {
    pub n_votes: usize,
    pub rmse_bound: f64,
    pub pcc_bound: f64,
}

/// BinoVotes bounds for each vote count in `n_votes_range`, for quality
/// moments taken from `d`.
pub fn bound_curves(
    scale: RatingScale,
    d: &QualityDistribution,
    n_votes_range: &[usize],
) -> Result<Vec<BoundCurveRow>, BoundsError> {
    n_votes_range
        .iter()
        .map(|&n_v| {
            let report = binovotes_bounds(scale, d.mean(), d.variance(), n_v as f64)?;
            Ok(BoundCurveRow {
                n_votes: n_v,
                rmse_bound: report.rmse_bound,
                pcc_bound: report.pcc_bound,
            })
        })
        .collect()
}
