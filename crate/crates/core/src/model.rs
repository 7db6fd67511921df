//! The BinoVotes vote model and the BinoMOS distribution it induces.
//!
//! A BinoVotes rating for a file of true quality `y` is a binomial draw with
//! `n_s - 1` trials and success probability `(y - s_lo) / (s_hi - s_lo)`,
//! scaled and shifted onto the rating scale. Votes are therefore discrete,
//! bounded, conditionally unbiased (their mean is `y`), and their variance
//! follows the parabola `(y - s_lo)(s_hi - y) / (n_s - 1)`, which vanishes at
//! the scale ends as it must. Averaging `n_v` such votes gives BinoMOS, whose
//! support is the MOS lattice and whose law is a mixture of binomials over
//! the true-quality distribution; for beta-distributed quality that mixture
//! is a scaled beta-binomial.

use crate::quad::{GaussLegendre, DEFAULT_NODES};
use crate::quality::QualityDistribution;
use crate::scale::{MosLattice, RatingScale, ScaleError};
use rand::Rng;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error("moments (mean {mean}, variance {variance}) are infeasible on this scale: the vote variance would be negative (cap {cap})")]
    InfeasibleMoments { mean: f64, variance: f64, cap: f64 },
    #[error("distribution support [{0}, {1}] does not match the scale [{2}, {3}]")]
    SupportMismatch(f64, f64, f64, f64),
    #[error("this operation needs a {needed} distribution")]
    UnsupportedDistribution { needed: &'static str },
    #[error("votes per file must be at least 1")]
    InvalidVotes,
}

/// The PMF of a BinoMOS random variable over its MOS lattice.
#[derive(Debug, Clone)]
pub struct BinoMosPmf {
    lattice: MosLattice,
    probabilities: Vec<f64>,
}

impl BinoMosPmf {
    pub fn lattice(&self) -> MosLattice {
        self.lattice
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| p * self.lattice.point(k))
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| p * (self.lattice.point(k) - m).powi(2))
            .sum()
    }

    /// Largest absolute gap between this PMF's CDF and another CDF sampled at
    /// the lattice points. Used to compare against the underlying continuous
    /// quality law.
    pub fn cdf_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let mut acc = 0.0;
        let mut worst: f64 = 0.0;
        for (k, p) in self.probabilities.iter().enumerate() {
            acc += p;
            worst = worst.max((acc - cdf(self.lattice.point(k))).abs());
        }
        worst
    }
}

/// Binomial vote model on a rating scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinoVotesModel {
    scale: RatingScale,
}

impl BinoVotesModel {
    pub fn new(scale: RatingScale) -> Self {
        BinoVotesModel { scale }
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    fn success_probability(&self, y: f64) -> f64 {
        ((y - self.scale.lo()) / self.scale.span()).clamp(0.0, 1.0)
    }

    fn check_support(&self, d: &QualityDistribution) -> Result<(), ModelError> {
        if d.lo() == self.scale.lo() && d.hi() == self.scale.hi() {
            Ok(())
        } else {
            Err(ModelError::SupportMismatch(
                d.lo(),
                d.hi(),
                self.scale.lo(),
                self.scale.hi(),
            ))
        }
    }

    /// Probability of each rating level for a file of true quality `y`.
    pub fn vote_pmf_given_y(&self, y: f64) -> Result<Vec<f64>, ModelError> {
        self.scale.check_in_range(y)?;
        Ok(binomial_pmf_vec(
            self.scale.n_levels() - 1,
            self.success_probability(y),
        ))
    }

    /// One vote for a file of true quality `y`, as a rating-scale level.
    pub fn sample_vote<R: Rng + ?Sized>(&self, y: f64, rng: &mut R) -> Result<f64, ModelError> {
        let k = self.sample_vote_count(y, 0.0, rng)?;
        Ok(self.scale.level(k))
    }

    /// One vote as a raw binomial count (the level index), with the
    /// conditional mean shifted by `delta` and clamped to the scale. Counts
    /// let callers form exact MOS lattice points by summation.
    pub(crate) fn sample_vote_count<R: Rng + ?Sized>(
        &self,
        y: f64,
        delta: f64,
        rng: &mut R,
    ) -> Result<usize, ModelError> {
        self.scale.check_in_range(y)?;
        let shifted = (y + delta).clamp(self.scale.lo(), self.scale.hi());
        Ok(sample_binomial(
            self.scale.n_levels() - 1,
            self.success_probability(shifted),
            rng,
        ))
    }

    /// Conditional vote variance as a function of true quality:
    /// `(y - s_lo)(s_hi - y) / (n_s - 1)`.
    pub fn vote_variance_fn(&self, y: f64) -> Result<f64, ModelError> {
        self.scale.check_in_range(y)?;
        Ok((y - self.scale.lo()) * (self.scale.hi() - y) / (self.scale.n_levels() - 1) as f64)
    }

    /// Expected vote variance when true quality has the given moments:
    /// `((mu - s_lo)(s_hi - mu) - var) / (n_s - 1)`.
    ///
    /// Rejects moment pairs that would make the variance negative instead of
    /// clamping: a negative value always signals bad inputs.
    pub fn expected_vote_variance(&self, mu: f64, var: f64) -> Result<f64, ModelError> {
        self.scale.check_in_range(mu)?;
        let cap = (mu - self.scale.lo()) * (self.scale.hi() - mu);
        if !(var >= 0.0) || var > cap {
            return Err(ModelError::InfeasibleMoments {
                mean: mu,
                variance: var,
                cap,
            });
        }
        Ok((cap - var) / (self.scale.n_levels() - 1) as f64)
    }

    /// MOS variance when averaging `n_v` votes over quality with the given
    /// moments: `((mu - s_lo)(s_hi - mu) + (n_m - 1) var) / n_m`.
    pub fn binomos_variance(&self, mu: f64, var: f64, n_v: usize) -> Result<f64, ModelError> {
        if n_v < 1 {
            return Err(ModelError::InvalidVotes);
        }
        self.scale.check_in_range(mu)?;
        let cap = (mu - self.scale.lo()) * (self.scale.hi() - mu);
        if !(var >= 0.0) || var > cap {
            return Err(ModelError::InfeasibleMoments {
                mean: mu,
                variance: var,
                cap,
            });
        }
        let n_m = (n_v * (self.scale.n_levels() - 1)) as f64;
        Ok((cap + (n_m - 1.0) * var) / n_m)
    }

    /// The BinoMOS PMF for `n_v` votes when true quality follows `d`.
    ///
    /// Point masses use the binomial law directly, scaled betas use the
    /// beta-binomial closed form, and other densities are integrated with
    /// Gauss-Legendre quadrature.
    pub fn binomos_pmf(
        &self,
        d: &QualityDistribution,
        n_v: usize,
    ) -> Result<BinoMosPmf, ModelError> {
        if n_v < 1 {
            return Err(ModelError::InvalidVotes);
        }
        self.check_support(d)?;
        if d.is_moments_only() {
            return Err(ModelError::UnsupportedDistribution {
                needed: "density-bearing or point-mass",
            });
        }
        let lattice = MosLattice::new(self.scale, n_v)?;
        let n_m = lattice.resolution();
        if let Some(y0) = d.point_mass_value() {
            return Ok(BinoMosPmf {
                lattice,
                probabilities: binomial_pmf_vec(n_m, self.success_probability(y0)),
            });
        }
        if let Some((alpha, beta)) = d.beta_shape() {
            return Ok(BinoMosPmf {
                lattice,
                probabilities: beta_binomial_pmf_vec(n_m, alpha, beta),
            });
        }
        self.binomos_pmf_quadrature(d, n_v)
    }

    /// The BinoMOS PMF computed by quadrature of the mixture integral.
    ///
    /// This is the general route for arbitrary densities; for scaled betas it
    /// is an independent check on the beta-binomial closed form.
    pub fn binomos_pmf_quadrature(
        &self,
        d: &QualityDistribution,
        n_v: usize,
    ) -> Result<BinoMosPmf, ModelError> {
        if n_v < 1 {
            return Err(ModelError::InvalidVotes);
        }
        self.check_support(d)?;
        if d.is_moments_only() || d.is_point_mass() {
            return Err(ModelError::UnsupportedDistribution {
                needed: "density-bearing",
            });
        }
        let lattice = MosLattice::new(self.scale, n_v)?;
        let n_m = lattice.resolution();
        let rule = GaussLegendre::new(DEFAULT_NODES);
        let breaks = d.breakpoints();
        let mut probabilities = vec![0.0; n_m + 1];

        // Accumulate w * f(y) * Binomial(n_m, p(y)) row by row; splitting at
        // density kinks keeps each panel smooth for the rule.
        let mut cuts: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|&x| x > self.scale.lo() && x < self.scale.hi())
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut edges = vec![self.scale.lo()];
        edges.extend(cuts);
        edges.push(self.scale.hi());
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for i in 0..rule.len() {
                let (x, w) = rule_node(&rule, i);
                let y = mid + half * x;
                let fy = d.pdf(y).expect("density-bearing kind");
                if fy == 0.0 {
                    continue;
                }
                let row = binomial_pmf_vec(n_m, self.success_probability(y));
                let scale = w * half * fy;
                for (out, p) in probabilities.iter_mut().zip(&row) {
                    *out += scale * p;
                }
            }
        }
        Ok(BinoMosPmf {
            lattice,
            probabilities,
        })
    }

    /// A MOS value: the average of `n_v` independent votes. The result is a
    /// MOS lattice point by construction.
    pub fn sample_mos<R: Rng + ?Sized>(
        &self,
        y: f64,
        n_v: usize,
        rng: &mut R,
    ) -> Result<f64, ModelError> {
        if n_v < 1 {
            return Err(ModelError::InvalidVotes);
        }
        self.scale.check_in_range(y)?;
        let lattice = MosLattice::new(self.scale, n_v)?;
        let n = self.scale.n_levels() - 1;
        let p = self.success_probability(y);
        let total: usize = (0..n_v).map(|_| sample_binomial(n, p, rng)).sum();
        Ok(lattice.point(total))
    }

    /// Vote PMF for a subject whose conditional mean is shifted by `delta`.
    ///
    /// The shift is applied to the quality before the binomial draw and
    /// clamped to the scale, so extreme-quality biased votes are not exactly
    /// zero-mean. Intended as a stress input for data-driven bound checks.
    pub fn biased_vote_pmf(&self, y: f64, delta: f64) -> Result<Vec<f64>, ModelError> {
        self.scale.check_in_range(y)?;
        let shifted = (y + delta).clamp(self.scale.lo(), self.scale.hi());
        self.vote_pmf_given_y(shifted)
    }

    /// One vote from a subject with conditional-mean bias `delta`.
    pub fn sample_biased_vote<R: Rng + ?Sized>(
        &self,
        y: f64,
        delta: f64,
        rng: &mut R,
    ) -> Result<f64, ModelError> {
        let k = self.sample_vote_count(y, delta, rng)?;
        Ok(self.scale.level(k))
    }
}

fn rule_node(rule: &GaussLegendre, i: usize) -> (f64, f64) {
    (rule.nodes()[i], rule.weights()[i])
}

/// Largest trial count whose binomial coefficients are all exact in f64
/// (C(50, 25) < 2^53). Up to here the PMF is computed in linear space, which
/// is bit-exact for dyadic success probabilities.
const EXACT_COEFF_LIMIT: usize = 50;

/// Binomial PMF over k = 0..=n. Small `n` uses exact coefficients in linear
/// space; larger `n` (fine MOS lattices) switches to log space so nothing
/// overflows.
pub(crate) fn binomial_pmf_vec(n: usize, p: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if p >= 1.0 {
        out[n] = 1.0;
        return out;
    }
    let q = 1.0 - p;
    if n <= EXACT_COEFF_LIMIT {
        // Pascal row for the coefficients.
        let mut coeff = vec![0.0f64; n + 1];
        coeff[0] = 1.0;
        for i in 1..=n {
            for k in (1..=i).rev() {
                coeff[k] += coeff[k - 1];
            }
        }
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = coeff[k] * p.powi(k as i32) * q.powi((n - k) as i32);
        }
        return out;
    }
    let ln_p = p.ln();
    let ln_q = q.ln();
    let ln_n_fact = ln_gamma(n as f64 + 1.0);
    for (k, slot) in out.iter_mut().enumerate() {
        let kf = k as f64;
        let nf = n as f64;
        let ln_choose = ln_n_fact - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0);
        *slot = (ln_choose + kf * ln_p + (nf - kf) * ln_q).exp();
    }
    out
}

/// Beta-binomial PMF over k = 0..=n with shape (alpha, beta).
pub(crate) fn beta_binomial_pmf_vec(n: usize, alpha: f64, beta: f64) -> Vec<f64> {
    let nf = n as f64;
    let ln_n_fact = ln_gamma(nf + 1.0);
    let ln_b0 = ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta);
    (0..=n)
        .map(|k| {
            let kf = k as f64;
            let ln_choose = ln_n_fact - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0);
            let ln_b =
                ln_gamma(kf + alpha) + ln_gamma(nf - kf + beta) - ln_gamma(nf + alpha + beta);
            (ln_choose + ln_b - ln_b0).exp()
        })
        .collect()
}

/// Binomial draw by PMF inversion. Reflects p > 1/2 so the starting mass
/// never underflows for any realistic trial count.
pub(crate) fn sample_binomial<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> usize {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if p > 0.5 {
        return n - sample_binomial_low(n, 1.0 - p, rng);
    }
    sample_binomial_low(n, p, rng)
}

fn sample_binomial_low<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> usize {
    let mut u = rng.random::<f64>();
    let q = 1.0 - p;
    let ratio = p / q;
    let mut pmf = q.powi(n as i32);
    let mut k = 0usize;
    loop {
        if u < pmf || k == n {
            return k;
        }
        u -= pmf;
        k += 1;
        pmf *= ratio * (n - k + 1) as f64 / k as f64;
    }
}
