//! Small sample-statistics helpers shared by the estimators and the
//! simulation engine.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("mismatched series lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("sample correlation undefined: {side} series has zero variance")]
    ZeroVariance { side: &'static str },
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n - 1 denominator).
pub fn sample_variance(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFewValues {
            needed: 2,
            got: xs.len(),
        });
    }
    let m = mean(xs);
    Ok(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// Population variance (n denominator).
pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean, estimated from the sample itself.
pub fn standard_error(xs: &[f64]) -> Result<f64, StatsError> {
    Ok((sample_variance(xs)? / xs.len() as f64).sqrt())
}

/// Sample Pearson correlation between two equal-length series.
pub fn sample_pcc(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(StatsError::TooFewValues {
            needed: 2,
            got: xs.len(),
        });
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance { side: "first" });
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance { side: "second" });
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Mean squared difference between two equal-length series.
pub fn mean_squared_error(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(StatsError::TooFewValues { needed: 1, got: 0 });
    }
    Ok(xs.iter().zip(ys).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / xs.len() as f64)
}
