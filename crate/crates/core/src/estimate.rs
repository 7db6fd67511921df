//! Bound estimation from real subjective-test samples.
//!
//! Given a sample of MOS values (and, when available, per-file vote
//! variances) this module estimates the inputs the bound formulas need and
//! produces bound reports under three vote-variance sources: the observed
//! per-file variances, a fixed pooled value, or the BinoVotes model applied
//! to the MOS sample itself.

use crate::bounds::{
    mse_lower_bound, pcc_upper_bound_from_mosvar, BoundInputs, BoundReport, BoundsError,
    VarianceSource,
};
use crate::scale::RatingScale;
use crate::stats;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EstimateError {
    #[error("need at least 2 files to estimate moments, got {0}")]
    TooFewFiles(usize),
    #[error("no file in the dataset carries vote variance information")]
    NoVarianceInfo,
    #[error("datasets use different rating scales; a pooled vote variance is only meaningful on a single scale")]
    MixedScales,
    #[error("no datasets supplied")]
    EmptyInput,
    #[error("MOS lattice resolution n_m = {0} must exceed 1")]
    DegenerateNm(f64),
    #[error("sample moments (mean {mean}, variance {variance}) are infeasible on the scale: implied vote variance is negative")]
    InfeasibleSample { mean: f64, variance: f64 },
    #[error("quality variance estimate is negative: {0}")]
    NegativeEstimate(f64),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// Convention for computing a per-file vote variance from raw votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceConvention {
    /// n - 1 denominator; each per-file variance is then an unbiased
    /// estimate of the conditional vote variance.
    #[default]
    Unbiased,
    /// n denominator, for reproducing datasets published that way.
    Population,
}

impl VarianceConvention {
    pub fn apply(&self, votes: &[f64]) -> Option<f64> {
        if votes.len() < 2 {
            return None;
        }
        match self {
            VarianceConvention::Unbiased => Some(stats::sample_variance(votes).unwrap()),
            VarianceConvention::Population => Some(stats::population_variance(votes)),
        }
    }
}

/// One rated media file: its MOS, vote count, and optional variance info.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileRecord {
    pub file_id: String,
    pub mos: f64,
    pub n_votes: usize,
    pub vote_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_votes: Option<Vec<f64>>,
}

impl FileRecord {
    /// Builds a record from raw votes; MOS, count, and variance follow.
    pub fn from_votes(
        file_id: impl Into<String>,
        votes: Vec<f64>,
        convention: VarianceConvention,
    ) -> Self {
        let mos = stats::mean(&votes);
        let vote_variance = convention.apply(&votes);
        FileRecord {
            file_id: file_id.into(),
            mos,
            n_votes: votes.len(),
            vote_variance,
            raw_votes: Some(votes),
        }
    }
}

/// A subjective-test dataset normalized onto one rating scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MosDataset {
    pub scale: RatingScale,
    pub provenance: String,
    pub files: Vec<FileRecord>,
}

impl MosDataset {
    pub fn n_files(&self) -> usize {
        self.files.len()
    }
}

/// First and second MOS sample moments plus the average vote count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    /// Sample mean of the MOS values.
    pub mu_hat: f64,
    /// Unbiased sample variance of the MOS values.
    pub var_hat: f64,
    pub n_files: usize,
    /// Arithmetic mean of per-file vote counts.
    pub n_votes_mean: f64,
}

/// MOS sample moments of a dataset.
pub fn sample_stats(ds: &MosDataset) -> Result<SampleStats, EstimateError> {
    if ds.files.len() < 2 {
        return Err(EstimateError::TooFewFiles(ds.files.len()));
    }
    let mos: Vec<f64> = ds.files.iter().map(|f| f.mos).collect();
    let n_votes_mean =
        ds.files.iter().map(|f| f.n_votes as f64).sum::<f64>() / ds.files.len() as f64;
    Ok(SampleStats {
        mu_hat: stats::mean(&mos),
        var_hat: stats::sample_variance(&mos).unwrap(),
        n_files: ds.files.len(),
        n_votes_mean,
    })
}

/// Average observed per-file vote variance, and how many files supplied it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservedVoteVariance {
    pub value: f64,
    pub files_used: usize,
    /// Files skipped because a single vote has no within-file variance.
    pub files_excluded: usize,
}

/// Mean of the per-file vote variances.
///
/// Files with one vote carry no variance and are excluded (they still count
/// toward MOS moments elsewhere); the exclusion count is reported so callers
/// can warn.
pub fn observed_vote_variance(ds: &MosDataset) -> Result<ObservedVoteVariance, EstimateError> {
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for f in &ds.files {
        if f.n_votes < 2 {
            excluded += 1;
            continue;
        }
        match f.vote_variance {
            Some(v) => {
                sum += v;
                used += 1;
            }
            None => return Err(EstimateError::NoVarianceInfo),
        }
    }
    if used == 0 {
        return Err(EstimateError::NoVarianceInfo);
    }
    Ok(ObservedVoteVariance {
        value: sum / used as f64,
        files_used: used,
        files_excluded: excluded,
    })
}

/// Unweighted mean of the per-dataset observed vote variances.
///
/// All datasets must share one rating scale: a pooled vote variance from one
/// scale says nothing about another.
pub fn global_average_vote_variance(datasets: &[MosDataset]) -> Result<f64, EstimateError> {
    let first = datasets.first().ok_or(EstimateError::EmptyInput)?;
    if datasets.iter().any(|d| d.scale != first.scale) {
        return Err(EstimateError::MixedScales);
    }
    let per_dataset: Vec<f64> = datasets
        .iter()
        .map(|d| observed_vote_variance(d).map(|o| o.value))
        .collect::<Result<_, _>>()?;
    Ok(stats::mean(&per_dataset))
}

/// Expected vote variance under BinoVotes implied by a MOS sample:
/// `n_v / (n_m - 1) * ((mu - s_lo)(s_hi - mu) - var)` with
/// `n_m = n_v (n_s - 1)`.
pub fn binovotes_vote_variance(
    stats: &SampleStats,
    scale: RatingScale,
) -> Result<f64, EstimateError> {
    let n_v = stats.n_votes_mean;
    let n_m = n_v * (scale.n_levels() - 1) as f64;
    if n_m <= 1.0 {
        return Err(EstimateError::DegenerateNm(n_m));
    }
    let cap = (stats.mu_hat - scale.lo()) * (scale.hi() - stats.mu_hat);
    if cap <= stats.var_hat {
        return Err(EstimateError::InfeasibleSample {
            mean: stats.mu_hat,
            variance: stats.var_hat,
        });
    }
    Ok(n_v / (n_m - 1.0) * (cap - stats.var_hat))
}

/// Quality variance implied by a MOS sample and a vote variance:
/// `var_x - vote_variance / n_v`.
pub fn quality_variance_estimate(
    stats: &SampleStats,
    vote_variance: f64,
) -> Result<f64, EstimateError> {
    let v = stats.var_hat - vote_variance / stats.n_votes_mean;
    if v < 0.0 {
        return Err(EstimateError::NegativeEstimate(v));
    }
    Ok(v)
}

/// Which vote-variance source a bound estimate should use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceMode {
    /// Average the per-file variances observed in the dataset.
    DataDriven,
    /// Use a fixed pooled value (same rating scale required by the caller).
    GlobalAverage(f64),
    /// Derive the variance from the BinoVotes model and the MOS sample.
    Binovotes,
}

/// Bound estimates from summary statistics and a vote-variance figure.
pub fn bounds_from_stats(
    stats: &SampleStats,
    vote_variance: f64,
    source: VarianceSource,
) -> Result<BoundReport, EstimateError> {
    let n_v = stats.n_votes_mean;
    let mse = mse_lower_bound(vote_variance, n_v)?;
    let pcc = pcc_upper_bound_from_mosvar(stats.var_hat, vote_variance, n_v)?;
    Ok(BoundReport {
        mse_bound: mse,
        rmse_bound: mse.sqrt(),
        pcc_bound: pcc,
        variance_source: source,
        inputs: BoundInputs {
            n_votes: n_v,
            expected_vote_variance: vote_variance,
            var_y: None,
            var_x: Some(stats.var_hat),
        },
    })
}

/// Bound estimates for summary statistics under the chosen variance mode.
///
/// This is the summary-level entry point: it needs no per-file data except
/// in [`VarianceMode::DataDriven`], which is why that mode is not available
/// here.
pub fn bounds_from_stats_mode(
    stats: &SampleStats,
    scale: RatingScale,
    mode: VarianceMode,
) -> Result<BoundReport, EstimateError> {
    match mode {
        VarianceMode::DataDriven => Err(EstimateError::NoVarianceInfo),
        VarianceMode::GlobalAverage(v) => {
            bounds_from_stats(stats, v, VarianceSource::GlobalAverage)
        }
        VarianceMode::Binovotes => {
            let v = binovotes_vote_variance(stats, scale)?;
            bounds_from_stats(stats, v, VarianceSource::BinovotesModel)
        }
    }
}

/// Options for [`estimate_bounds_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct EstimateOptions {
    /// Average per-file `variance / n_votes` instead of dividing the pooled
    /// variance by the average vote count. Only affects the data-driven mode
    /// on datasets with variable votes per file.
    pub exact_per_file: bool,
}

/// Bound estimates for a dataset under the chosen variance mode.
pub fn estimate_bounds(ds: &MosDataset, mode: VarianceMode) -> Result<BoundReport, EstimateError> {
    estimate_bounds_with(ds, mode, EstimateOptions::default())
}

pub fn estimate_bounds_with(
    ds: &MosDataset,
    mode: VarianceMode,
    opts: EstimateOptions,
) -> Result<BoundReport, EstimateError> {
    let st = sample_stats(ds)?;
    match mode {
        VarianceMode::DataDriven => {
            if opts.exact_per_file {
                // Faithful per-file noise: mean of variance_i / n_votes_i.
                let mut noise_sum = 0.0;
                let mut used = 0usize;
                for f in &ds.files {
                    if f.n_votes < 2 {
                        continue;
                    }
                    match f.vote_variance {
                        Some(v) => {
                            noise_sum += v / f.n_votes as f64;
                            used += 1;
                        }
                        None => return Err(EstimateError::NoVarianceInfo),
                    }
                }
                if used == 0 {
                    return Err(EstimateError::NoVarianceInfo);
                }
                let mse = noise_sum / used as f64;
                let pcc = pcc_upper_bound_from_mosvar(st.var_hat, mse, 1.0)?;
                Ok(BoundReport {
                    mse_bound: mse,
                    rmse_bound: mse.sqrt(),
                    pcc_bound: pcc,
                    variance_source: VarianceSource::DataDriven,
                    inputs: BoundInputs {
                        n_votes: st.n_votes_mean,
                        expected_vote_variance: mse * st.n_votes_mean,
                        var_y: None,
                        var_x: Some(st.var_hat),
                    },
                })
            } else {
                let obs = observed_vote_variance(ds)?;
                bounds_from_stats(&st, obs.value, VarianceSource::DataDriven)
            }
        }
        other => bounds_from_stats_mode(&st, ds.scale, other),
    }
}

/// Result of the MOS range-coverage rule: `2 (n_s - 1)` uniform bins over
/// the scale must all be occupied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub pass: bool,
    pub bin_counts: Vec<usize>,
    pub bin_width: f64,
}

/// Checks that the dataset's MOS values cover the whole scale.
///
/// Bin edges follow the convention that a boundary value belongs to the
/// lower bin, except the scale top which belongs to the top bin.
pub fn range_coverage_check(ds: &MosDataset) -> CoverageReport {
    let n_bins = 2 * (ds.scale.n_levels() - 1);
    let width = ds.scale.span() / n_bins as f64;
    let mut bin_counts = vec![0usize; n_bins];
    for f in &ds.files {
        let offset = f.mos - ds.scale.lo();
        let idx = if offset <= 0.0 {
            0
        } else {
            ((offset / width).ceil() as usize - 1).min(n_bins - 1)
        };
        bin_counts[idx] += 1;
    }
    CoverageReport {
        pass: bin_counts.iter().all(|&c| c > 0),
        bin_counts,
        bin_width: width,
    }
}
